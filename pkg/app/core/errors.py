"""
Exception hierarchy for the regulation toolkit
"""

from typing import Any, List, Optional


class CoopRegError(Exception):
    """Base class for every error raised by the toolkit"""

    error_type = "coopreg_error"

    def to_dict(self) -> dict:
        return {"error": {"message": str(self), "type": self.error_type}}


class DimensionError(CoopRegError, ValueError):
    """Matrix shapes do not conform"""

    error_type = "dimension_error"


class NumericError(CoopRegError):
    """A numerical routine failed to converge or produced non-finite output"""

    error_type = "numeric_error"


class PreconditionError(CoopRegError):
    """An operation was called outside its stated hypotheses"""

    error_type = "precondition_error"


class MarginalStabilityError(PreconditionError):
    """Matrix is not marginally stable"""

    error_type = "marginal_stability_error"


class SynthesisError(CoopRegError):
    """Gain synthesis failed; `check` names the violated requirement"""

    error_type = "synthesis_error"

    def __init__(self, message: str, check: Optional[str] = None, agent: Optional[int] = None):
        super().__init__(message)
        self.check = check
        self.agent = agent


class NoSolutionError(CoopRegError):
    """Linear matrix system is inconsistent"""

    error_type = "no_solution_error"

    def __init__(self, message: str, residual: float, solution: Any = None):
        super().__init__(message)
        self.residual = residual
        self.solution = solution


class ConnectivityError(CoopRegError):
    """Graph does not let the leader reach every follower"""

    error_type = "connectivity_error"


class TopologyError(CoopRegError, ValueError):
    """Malformed graph or switching schedule"""

    error_type = "topology_error"


class AssemblyError(CoopRegError):
    """Closed loop cannot be assembled from the given law and scenario"""

    error_type = "assembly_error"


class StructuralMismatchError(CoopRegError):
    """Closed-loop spectrum does not decompose as expected"""

    error_type = "structural_mismatch_error"

    def __init__(self, message: str, unmatched: Optional[List[complex]] = None):
        super().__init__(message)
        self.unmatched = unmatched or []


class DivergenceError(CoopRegError):
    """Simulation state left the finite region"""

    error_type = "divergence_error"

    def __init__(self, message: str, time: float, norm: float, trajectory: Any = None):
        super().__init__(message)
        self.time = time
        self.norm = norm
        self.trajectory = trajectory


class ScenarioParseError(CoopRegError, ValueError):
    """Scenario or gains document could not be parsed"""

    error_type = "scenario_parse_error"

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
