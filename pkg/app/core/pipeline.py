"""
check / synth / run / sweep flows shared by the CLI and the HTTP service
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Callable, Dict, List, Optional, Sequence

from app.config import Config
from app.core.errors import (
    AssemblyError,
    CoopRegError,
    DimensionError,
    DivergenceError,
    ScenarioParseError,
    TopologyError,
)
from app.core.plantmodel import AssumptionReport, Scenario
from app.core.simkit import ControlLaw, Metrics, ProgressCallback, Trajectory, assemble, integrate, metrics
from app.core.synthesis import GainSet, solvability_report, synthesize

logger = logging.getLogger(__name__)

PhaseCallback = Callable[[str], None]


class ExitCode(IntEnum):
    OK = 0
    FAILED = 1
    INPUT_ERROR = 2
    DIVERGED = 3


def exit_code_for(exc: BaseException) -> ExitCode:
    """Map an exception to the process exit code"""
    if isinstance(exc, DivergenceError):
        return ExitCode.DIVERGED
    if isinstance(exc, (ScenarioParseError, DimensionError, TopologyError, AssemblyError)):
        return ExitCode.INPUT_ERROR
    return ExitCode.FAILED


def _phase(callback: Optional[PhaseCallback], name: str):
    if callback is not None:
        callback(name)


def check(sc: Scenario, on_phase: Optional[PhaseCallback] = None) -> AssumptionReport:
    _phase(on_phase, "checking")
    report = solvability_report(sc)
    logger.info("check %s: %d failure(s), %d warning(s)", sc.name, len(report.failures), len(report.warnings))
    return report


def check_exit_code(report: AssumptionReport) -> ExitCode:
    return ExitCode.OK if report.ok else ExitCode.FAILED


def synth(sc: Scenario, on_phase: Optional[PhaseCallback] = None) -> GainSet:
    _phase(on_phase, "synthesizing")
    return synthesize(sc)


@dataclass
class RunResult:
    scenario: Scenario
    gains: GainSet
    threshold: float
    trajectory: Optional[Trajectory] = None
    metrics: Optional[Metrics] = None
    divergence: Optional[Dict[str, float]] = None

    @property
    def diverged(self) -> bool:
        return self.divergence is not None

    @property
    def exit_code(self) -> ExitCode:
        if self.diverged:
            return ExitCode.DIVERGED
        return ExitCode.OK if self.metrics.converged else ExitCode.FAILED

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "scenario": self.scenario.name,
            "diverged": self.diverged,
            "exit_code": int(self.exit_code),
            "threshold": self.threshold,
        }
        if self.diverged:
            out["divergence"] = self.divergence
        if self.metrics is not None:
            out["metrics"] = self.metrics.to_dict()
        if self.trajectory is not None:
            out["samples"] = len(self.trajectory)
            out["refinements"] = self.trajectory.refinements
        return out


def run(
    sc: Scenario,
    gains: Optional[GainSet] = None,
    flip_k1: bool = False,
    threshold: Optional[float] = None,
    on_phase: Optional[PhaseCallback] = None,
    on_progress: Optional[ProgressCallback] = None,
) -> RunResult:
    """
    Synthesize (unless gains are given), assemble and integrate, then
    measure tracking over the final window. Divergence is reported in the
    result, not raised. `on_progress` receives integration step counts.
    """
    threshold = threshold or sc.law.threshold or Config.THRESHOLD
    if gains is None:
        gains = synth(sc, on_phase)
    if flip_k1:
        gains = gains.flip_k1()
        logger.warning("K1 negated for every agent")

    loop = assemble(sc, ControlLaw.from_gains(gains))
    _phase(on_phase, "simulating")
    result = RunResult(sc, gains, threshold)
    try:
        result.trajectory = integrate(loop, on_progress=on_progress)
    except DivergenceError as e:
        logger.warning("run %s diverged at t=%g", sc.name, e.time)
        result.trajectory = e.trajectory
        result.divergence = {"time": e.time, "norm": e.norm}
        return result
    result.metrics = metrics(result.trajectory, threshold)
    return result


@dataclass
class SweepRow:
    mu: Optional[float]
    step: Optional[float]
    exit_code: ExitCode
    metrics: Optional[Metrics] = None
    divergence: Optional[Dict[str, float]] = None
    error: Optional[str] = None

    @property
    def converged(self) -> bool:
        return self.exit_code == ExitCode.OK

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu": self.mu,
            "step": self.step,
            "exit_code": int(self.exit_code),
            "converged": self.converged,
            "max_final_error": self.metrics.max_final_error if self.metrics else None,
            "max_observer_error": self.metrics.max_observer_error if self.metrics else None,
            "observer_convergence_time": self.metrics.observer_convergence_time if self.metrics else None,
            "convergence_time": self.metrics.convergence_time if self.metrics else None,
            "divergence": self.divergence,
            "error": self.error,
        }


@dataclass
class SweepResult:
    scenario: str
    rows: List[SweepRow] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"scenario": self.scenario, "rows": [r.to_dict() for r in self.rows]}


def _sweep_point(sc: Scenario, mu: Optional[float], step: Optional[float], threshold: Optional[float]) -> SweepRow:
    overrides: Dict[str, Any] = {}
    if mu is not None:
        overrides["mu"] = mu
    if step is not None:
        overrides["step"] = step
    try:
        result = run(sc.with_overrides(**overrides), threshold=threshold)
    except CoopRegError as e:
        return SweepRow(mu, step, exit_code_for(e), error=str(e))
    return SweepRow(mu, step, result.exit_code, result.metrics, result.divergence)


def sweep(
    sc: Scenario,
    mus: Optional[Sequence[float]] = None,
    steps: Optional[Sequence[float]] = None,
    threshold: Optional[float] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """
    One run per (μ, step) grid point, μ outermost. Points run on a thread
    pool; rows come back in grid order and sub-run errors stay in their row.
    """
    if not mus and not steps:
        raise DimensionError("sweep needs a mu grid, a step grid or both")
    grid = list(itertools.product(mus or [None], steps or [None]))
    workers = workers or Config.SWEEP_WORKERS
    logger.info("sweeping %d grid point(s) on %d worker(s)", len(grid), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda point: _sweep_point(sc, point[0], point[1], threshold), grid))
    return SweepResult(sc.name, rows)
