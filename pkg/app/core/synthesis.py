"""
Regulator equations, solvability analysis and per-agent gain synthesis
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.core.errors import CoopRegError, NoSolutionError, SynthesisError
from app.core.numkit import (
    MatrixEquation,
    MatrixTerm,
    as_matrix,
    is_hurwitz,
    is_schur,
    numeric_rank,
    pbh_detectable,
    solve_are,
    solve_dare,
    solve_linear_matrix_system,
    spectrum,
)
from app.core.observers import ObserverGains, design_observer, observer_report
from app.core.plantmodel import (
    AssumptionReport,
    CheckResult,
    Exosystem,
    LawKind,
    PlantAgent,
    Scenario,
    validate_assumptions,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RegulatorSolution:
    X: np.ndarray
    U: np.ndarray
    residual: float
    exact: bool


def solve_regulator(agent: PlantAgent, S, strict: bool = True) -> RegulatorSolution:
    """
    Solve XS = AX + BU + E, 0 = CX + DU + F by vectorization.

    Raises:
        NoSolutionError: no exact solution while `strict` is set; the
            least-squares RegulatorSolution is attached
    """
    S = as_matrix(S, "S")
    q = S.shape[0]
    n, m = agent.n, agent.m
    In, Iq = np.eye(n), np.eye(q)
    equations = [
        MatrixEquation((MatrixTerm(In, 0, S), MatrixTerm(-agent.A, 0, Iq), MatrixTerm(-agent.B, 1, Iq)), agent.E),
        MatrixEquation((MatrixTerm(agent.C, 0, Iq), MatrixTerm(agent.D, 1, Iq)), -agent.F),
    ]
    result = solve_linear_matrix_system(equations, [(n, q), (m, q)], strict=False)
    X, U = result.solutions
    solution = RegulatorSolution(X, U, result.residual, result.exact)
    if strict and not result.exact:
        raise NoSolutionError(f"regulator equations have no exact solution (residual {result.residual:.3e})",
                              residual=result.residual, solution=solution)
    return solution


@dataclass
class RankEntry:
    eigenvalue: complex
    rank: int
    required: int

    @property
    def passed(self) -> bool:
        return self.rank >= self.required


@dataclass
class RankReport:
    entries: List[RankEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def failing(self) -> List[RankEntry]:
        return [e for e in self.entries if not e.passed]


def check_rank_condition(agent: PlantAgent, S) -> RankReport:
    """rank [[A - λI, B], [C, D]] = n + p at every λ ∈ σ(S)"""
    n = agent.n
    required = n + agent.p
    report = RankReport()
    for ev in spectrum(S):
        pencil = np.block([[agent.A - ev.value * np.eye(n), agent.B], [agent.C, agent.D]])
        report.entries.append(RankEntry(ev.value, numeric_rank(pencil), required))
    return report


def design_feedback(agent: PlantAgent, discrete: bool = False) -> np.ndarray:
    """K1 = -BᵀP from the Q = I, R = I Riccati equation"""
    if discrete:
        P = solve_dare(agent.A, agent.B)
        R = np.eye(agent.m) + agent.B.T @ P @ agent.B
        K1 = -np.linalg.solve(R, agent.B.T @ P @ agent.A)
        stable = is_schur(agent.A + agent.B @ K1)
    else:
        P = solve_are(agent.A, agent.B)
        K1 = -agent.B.T @ P
        stable = is_hurwitz(agent.A + agent.B @ K1)
    if not stable:
        raise SynthesisError("state feedback does not stabilize A + B K1", check="stabilizable")
    return K1


def feedforward(X: np.ndarray, U: np.ndarray, K1: np.ndarray) -> np.ndarray:
    """K2 = U - K1 X"""
    return U - K1 @ X


def partition_feedforward(K2: np.ndarray, q_u: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split K2 into [K2u, K2m] at column q_u"""
    return K2[:, :q_u], K2[:, q_u:]


def design_luenberger(agent: PlantAgent, S_u, discrete: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Observer gain L for the plant augmented with the unmeasured exosystem,
    by duality with the state-feedback Riccati design.

    Returns:
        (L, A_L) with A_L = Ā - L C̄ Hurwitz (Schur when discrete)

    Raises:
        SynthesisError: composite pair not detectable
    """
    S_u = as_matrix(S_u, "S_u", shape=(agent.q_u, agent.q_u))
    A_bar, _, C_bar = agent.composite(S_u)
    if not pbh_detectable(C_bar, A_bar, discrete=discrete):
        raise SynthesisError("composite pair ([C_m, F_mu], [[A, E_u], [0, S_u]]) is not detectable", check="detectable")
    if discrete:
        P = solve_dare(A_bar.T, C_bar.T)
        R = np.eye(C_bar.shape[0]) + C_bar @ P @ C_bar.T
        L = A_bar @ P @ C_bar.T @ np.linalg.inv(R)
        A_L = A_bar - L @ C_bar
        stable = is_schur(A_L)
    else:
        P = solve_are(A_bar.T, C_bar.T)
        L = P @ C_bar.T
        A_L = A_bar - L @ C_bar
        stable = is_hurwitz(A_L)
    if not stable:
        raise SynthesisError("Luenberger gain does not stabilize the composite error", check="detectable")
    return L, A_L


@dataclass(frozen=True, eq=False)
class AgentGains:
    """Gains for one follower; L and A_L only when a compensator is used"""
    K1: np.ndarray
    K2: np.ndarray
    q_u: int
    X: np.ndarray
    U: np.ndarray
    L: Optional[np.ndarray] = None
    A_L: Optional[np.ndarray] = None
    residual: float = 0.0
    provenance: Dict[str, str] = field(default_factory=dict)

    @property
    def K2u(self) -> np.ndarray:
        return self.K2[:, :self.q_u]

    @property
    def K2m(self) -> np.ndarray:
        return self.K2[:, self.q_u:]

    @property
    def n_z(self) -> int:
        return 0 if self.L is None else self.L.shape[0]


@dataclass(frozen=True, eq=False)
class GainSet:
    kind: LawKind
    agents: Tuple[AgentGains, ...]
    observer: Optional[ObserverGains] = None
    discrete: bool = False
    notes: Dict[str, Any] = field(default_factory=dict)

    def flip_k1(self) -> "GainSet":
        """Negate every K1 (destabilizing sabotage for negative tests)"""
        flipped = tuple(
            AgentGains(-g.K1, g.K2, g.q_u, g.X, g.U, g.L, g.A_L, g.residual, dict(g.provenance, K1="negated"))
            for g in self.agents
        )
        return GainSet(self.kind, flipped, self.observer, self.discrete, dict(self.notes, flip_k1=True))


def _check_split(kind: LawKind, exo: Exosystem):
    if kind in (LawKind.DISTRIBUTED_FULL_INFO, LawKind.SPECIAL_VM_ONLY) and exo.q_u:
        raise SynthesisError(f"{kind.value} needs every exogenous signal measured (q_u = 0)", check="exosystem-split")
    if kind == LawKind.SPECIAL_VU_ONLY and exo.q_m:
        raise SynthesisError(f"{kind.value} needs no measured exogenous signal (q_m = 0)", check="exosystem-split")


def synthesize_agent(
    agent: PlantAgent,
    exo: Exosystem,
    kind: LawKind,
    discrete: bool = False,
    index: Optional[int] = None,
) -> AgentGains:
    """K1, K2 (and L when the law reconstructs state) for one follower"""
    _check_split(kind, exo)
    try:
        solution = solve_regulator(agent, exo.S)
        K1 = design_feedback(agent, discrete)
        K2 = feedforward(solution.X, solution.U, K1)
        L = A_L = None
        provenance = {
            "K1": "discrete riccati Q=I R=I" if discrete else "riccati Q=I R=I",
            "K2": "U - K1 X",
        }
        if kind.uses_compensator:
            L, A_L = design_luenberger(agent, exo.S_u, discrete)
            provenance["L"] = "dual riccati on the composite pair"
    except NoSolutionError as e:
        raise SynthesisError(f"agent {index}: {e}", check="regulator-solvable", agent=index) from e
    except SynthesisError as e:
        raise SynthesisError(f"agent {index}: {e}", check=e.check, agent=index) from e
    logger.debug("agent %s: regulator residual %.3e", index, solution.residual)
    return AgentGains(K1, K2, exo.q_u, solution.X, solution.U, L, A_L, solution.residual, provenance)


def synthesize(sc: Scenario) -> GainSet:
    """Gains for every follower plus the distributed observer"""
    agents = tuple(
        synthesize_agent(agent, sc.exo, sc.law.kind, sc.discrete, index=i)
        for i, agent in enumerate(sc.agents, start=1)
    )
    observer = design_observer(sc)
    notes = {"observer_rule": observer.rule.value if observer else None}
    logger.info("synthesized %d agents (%s), observer %s", len(agents), sc.law.kind.value, notes["observer_rule"])
    return GainSet(sc.law.kind, agents, observer, sc.discrete, notes)


def solvability_report(sc: Scenario) -> AssumptionReport:
    """
    Assumption checks plus the rank condition per agent and a trial
    observer design, in one report
    """
    report = validate_assumptions(sc)
    for i, agent in enumerate(sc.agents, start=1):
        ranks = check_rank_condition(agent, sc.exo.S)
        detail = "holds at every exosystem eigenvalue" if ranks.passed else "fails at " + ", ".join(
            f"λ={e.eigenvalue:.4g} (rank {e.rank} < {e.required})" for e in ranks.failing
        )
        report.add(CheckResult(
            "rank-condition", ranks.passed, "error", agent=i, detail=detail,
            data={"failing": [[e.eigenvalue.real, e.eigenvalue.imag] for e in ranks.failing]},
        ))

    try:
        _check_split(sc.law.kind, sc.exo)
        gains = design_observer(sc)
        data = observer_report(gains, sc)
        detail = "no distributed observer" if gains is None else f"{gains.rule.value}, mu={gains.mu:.6g}"
        report.add(CheckResult("observer-design", True, "error", detail=detail, data=data))
    except CoopRegError as e:
        report.add(CheckResult("observer-design", False, "error", detail=str(e)))
    return report
