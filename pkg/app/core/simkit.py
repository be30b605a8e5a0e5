"""
Closed-loop assembly, time stepping and trajectory metrics.

The planned state is s = [x_1..x_N, z_1..z_N, η_1..η_N, (vec Ŝ_1..N), v].
Every linear law gives one matrix M_p per graph: ṡ = M_p s in continuous
time, s⁺ = M_p s for discrete scenarios. The adaptive observer adds the
bilinear Ŝ_i η_i term on top of M_p.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.config import Config
from app.core.errors import (
    AssemblyError,
    DimensionError,
    DivergenceError,
    PreconditionError,
    StructuralMismatchError,
)
from app.core.integrators import rk4_step, rk4_transition
from app.core.numkit import as_matrix, is_hurwitz, is_schur, match_spectra
from app.core.observers import (
    ObserverGains,
    ObserverVariant,
    error_matrix,
    initial_bank,
    leader_input_matrix,
)
from app.core.plantmodel import LawKind, PlantAgent, Scenario
from app.core.synthesis import GainSet
from app.core.topology import consensus_weights, h_matrix, union_graph

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int], None]

SEPARATION_TOL = 1e-7


@dataclass(frozen=True)
class StateLayout:
    """Offsets of every block inside the stacked closed-loop state"""
    n: Tuple[int, ...]
    n_z: Tuple[int, ...]
    q_eta: int
    q_u: int
    q_m: int
    adaptive: bool = False

    @property
    def N(self) -> int:
        return len(self.n)

    @property
    def q(self) -> int:
        return self.q_u + self.q_m

    @property
    def x_offset(self) -> int:
        return 0

    @property
    def z_offset(self) -> int:
        return sum(self.n)

    @property
    def eta_offset(self) -> int:
        return self.z_offset + sum(self.n_z)

    @property
    def shat_offset(self) -> int:
        return self.eta_offset + self.N * self.q_eta

    @property
    def shat_size(self) -> int:
        return self.N * self.q_eta * self.q_eta if self.adaptive else 0

    @property
    def v_offset(self) -> int:
        return self.shat_offset + self.shat_size

    @property
    def dim(self) -> int:
        return self.v_offset + self.q

    def x(self, i: int) -> slice:
        start = self.x_offset + sum(self.n[:i])
        return slice(start, start + self.n[i])

    def z(self, i: int) -> slice:
        start = self.z_offset + sum(self.n_z[:i])
        return slice(start, start + self.n_z[i])

    def eta(self, i: int) -> slice:
        start = self.eta_offset + i * self.q_eta
        return slice(start, start + self.q_eta)

    @property
    def eta_all(self) -> slice:
        return slice(self.eta_offset, self.shat_offset)

    @property
    def shat(self) -> slice:
        return slice(self.shat_offset, self.v_offset)

    @property
    def v(self) -> slice:
        return slice(self.v_offset, self.dim)

    @property
    def v_u(self) -> slice:
        return slice(self.v_offset, self.v_offset + self.q_u)

    @property
    def v_m(self) -> slice:
        return slice(self.v_offset + self.q_u, self.dim)

    @property
    def agent_part(self) -> slice:
        """Everything except the leader state"""
        return slice(0, self.v_offset)


@dataclass(frozen=True, eq=False)
class ControlLaw:
    """A law family bound to synthesized gains"""
    kind: LawKind
    gains: GainSet

    @classmethod
    def from_gains(cls, gains: GainSet) -> "ControlLaw":
        return cls(gains.kind, gains)

    def validate(self, sc: Scenario):
        """
        Raises:
            AssemblyError: gain shapes do not fit the scenario
        """
        if self.kind != self.gains.kind:
            raise AssemblyError(f"law kind {self.kind.value} does not match gains for {self.gains.kind.value}")
        if len(self.gains.agents) != sc.N:
            raise AssemblyError(f"gains cover {len(self.gains.agents)} agents, scenario has {sc.N}")
        q = sc.exo.q
        for i, (agent, g) in enumerate(zip(sc.agents, self.gains.agents), start=1):
            if g.K1.shape != (agent.m, agent.n):
                raise AssemblyError(f"agent {i}: K1 must be {agent.m}x{agent.n}, got {g.K1.shape[0]}x{g.K1.shape[1]}")
            if g.K2.shape != (agent.m, q):
                raise AssemblyError(f"agent {i}: K2 must be {agent.m}x{q}, got {g.K2.shape[0]}x{g.K2.shape[1]}")
            if g.q_u != sc.exo.q_u:
                raise AssemblyError(f"agent {i}: gains split K2 at {g.q_u}, exosystem has q_u = {sc.exo.q_u}")
            if self.kind.uses_compensator:
                expected = (agent.n + agent.q_u, agent.p_m)
                if g.L is None or g.L.shape != expected:
                    shape = "missing" if g.L is None else f"{g.L.shape[0]}x{g.L.shape[1]}"
                    raise AssemblyError(f"agent {i}: L must be {expected[0]}x{expected[1]}, got {shape}")
        observer = self.gains.observer
        if self.kind.uses_observer:
            if observer is None:
                raise AssemblyError(f"{self.kind.value} needs distributed observer gains")
            if observer.q != sc.exo.q_m:
                raise AssemblyError(f"observer estimates {observer.q} states, exosystem has q_m = {sc.exo.q_m}")


@dataclass(eq=False)
class ClosedLoop:
    """Assembled closed loop: one matrix per graph plus output maps"""
    scenario: Scenario
    law: ControlLaw
    layout: StateLayout
    matrices: List[np.ndarray]
    control_maps: List[np.ndarray]
    error_maps: List[np.ndarray]
    s0: np.ndarray
    discrete: bool = False
    _transitions: Dict[Tuple[int, float], np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def observer(self) -> Optional[ObserverGains]:
        return self.law.gains.observer

    @property
    def adaptive(self) -> bool:
        return self.layout.adaptive

    def transition(self, p: int, h: float) -> np.ndarray:
        """RK4 step matrix for graph p, cached per step size"""
        key = (p, h)
        if key not in self._transitions:
            self._transitions[key] = rk4_transition(self.matrices[p], h)
        return self._transitions[key]

    def field(self, p: int) -> Callable[[float, np.ndarray], np.ndarray]:
        """Vector field of graph p, including the adaptive observer's bilinear terms"""
        M = self.matrices[p]
        if not self.adaptive:
            return lambda t, s: M @ s

        layout = self.layout
        gains = self.observer
        graph = self.scenario.topology.graphs[p]
        H = h_matrix(graph).matrix
        a0 = graph.leader_weights
        N, q = layout.N, layout.q_eta
        S = gains.S

        def f(t: float, s: np.ndarray) -> np.ndarray:
            ds = M @ s
            S_hat = s[layout.shat].reshape(N, q, q)
            eta = s[layout.eta_all].reshape(N, q)
            ds[layout.eta_all] += np.einsum("iab,ib->ia", S_hat, eta).reshape(-1)
            dS = gains.mu1 * (-np.einsum("ij,jab->iab", H, S_hat) + a0[:, None, None] * S)
            ds[layout.shat] = dS.reshape(-1)
            return ds

        return f


def _layout(sc: Scenario, law: ControlLaw) -> StateLayout:
    observer = law.gains.observer
    n_z = tuple(g.n_z if law.kind.uses_compensator else 0 for g in law.gains.agents)
    return StateLayout(
        n=tuple(a.n for a in sc.agents),
        n_z=n_z,
        q_eta=observer.q if observer is not None else 0,
        q_u=sc.exo.q_u,
        q_m=sc.exo.q_m,
        adaptive=observer is not None and observer.variant == ObserverVariant.ADAPTIVE,
    )


def _control_map(i: int, agent: PlantAgent, law: ControlLaw, layout: StateLayout) -> np.ndarray:
    """G_i with u_i = G_i s"""
    g = law.gains.agents[i]
    G = np.zeros((agent.m, layout.dim))
    w = layout.eta(i) if law.kind.uses_observer else layout.v_m
    if law.kind == LawKind.DECENTRALIZED_FULL_INFO:
        G[:, layout.x(i)] = g.K1
        G[:, layout.v] = g.K2
    elif law.kind == LawKind.DISTRIBUTED_FULL_INFO:
        G[:, layout.x(i)] = g.K1
        G[:, w] = g.K2m
    else:
        G[:, layout.z(i)] = np.hstack([g.K1, g.K2u])
        if layout.q_m:
            G[:, w] += g.K2m
    return G


def _error_map(i: int, agent: PlantAgent, G: np.ndarray, layout: StateLayout) -> np.ndarray:
    """e_i = C x_i + D u_i + F v as a row map of s"""
    Ce = agent.D @ G
    Ce[:, layout.x(i)] += agent.C
    Ce[:, layout.v] += agent.F
    return Ce


def _initial_state(sc: Scenario, law: ControlLaw, layout: StateLayout) -> np.ndarray:
    s0 = np.zeros(layout.dim)
    for i, agent in enumerate(sc.agents):
        s0[layout.x(i)] = agent.x0
    v0 = sc.exo.v0.copy()
    observer = law.gains.observer
    if observer is not None:
        bank = initial_bank(sc, observer)
        s0[layout.eta_all] = bank.eta.reshape(-1)
        if bank.S_hat is not None:
            s0[layout.shat] = bank.S_hat.reshape(-1)
        if observer.variant == ObserverVariant.SYNC_REF:
            # virtual leader starts on the consensus value of the initial estimates
            union = union_graph([sc.topology.graphs[p] for p in sorted(set(sc.topology.active))])
            v0[sc.exo.q_u:] = consensus_weights(union) @ bank.eta
    s0[layout.v] = v0
    return s0


def assemble(sc: Scenario, law: ControlLaw) -> ClosedLoop:
    """
    Build the closed-loop matrices for every graph in the schedule.

    Raises:
        AssemblyError: gains and scenario do not fit together
    """
    law.validate(sc)
    layout = _layout(sc, law)
    observer = law.gains.observer
    S = sc.exo.S

    control_maps, error_maps = [], []
    for i, agent in enumerate(sc.agents):
        G = _control_map(i, agent, law, layout)
        control_maps.append(G)
        error_maps.append(_error_map(i, agent, G, layout))

    shared = np.zeros((layout.dim, layout.dim))
    shared[layout.v, layout.v] = S
    for i, agent in enumerate(sc.agents):
        G = control_maps[i]
        xs = layout.x(i)
        shared[xs, xs] += agent.A
        shared[xs, :] += agent.B @ G
        shared[xs, layout.v] += agent.E
        if not law.kind.uses_compensator:
            continue
        g = law.gains.agents[i]
        zs = layout.z(i)
        A_bar, B_bar, C_bar = agent.composite(sc.exo.S_u)
        w = layout.eta(i) if law.kind.uses_observer else layout.v_m
        E_m_bar = np.vstack([agent.E_m, np.zeros((agent.q_u, agent.q_m))])
        shared[zs, zs] += A_bar - g.L @ C_bar
        shared[zs, :] += B_bar @ G
        shared[zs, xs] += g.L @ agent.C_m
        shared[zs, layout.v_u] += g.L @ agent.F_mu
        shared[zs, layout.v_m] += g.L @ agent.F_mm
        if layout.q_m:
            shared[zs, w] += E_m_bar - g.L @ agent.F_mm

    matrices = []
    for graph in sc.topology.graphs:
        M = shared.copy()
        if observer is not None:
            E_obs = error_matrix(observer, graph)
            if layout.adaptive:
                E_obs = E_obs - np.kron(np.eye(layout.N), observer.S)
            M[layout.eta_all, layout.eta_all] = E_obs
            M[layout.eta_all, layout.v_m] = leader_input_matrix(observer, graph)
        matrices.append(M)

    s0 = _initial_state(sc, law, layout)
    logger.debug("assembled %s closed loop of dimension %d over %d graphs", law.kind.value, layout.dim, len(matrices))
    return ClosedLoop(sc, law, layout, matrices, control_maps, error_maps, s0, sc.discrete)


@dataclass(eq=False)
class Trajectory:
    """Sampled closed-loop states with per-sample active graph"""
    times: np.ndarray
    states: np.ndarray
    graph_index: np.ndarray
    loop: ClosedLoop
    refinements: List[Dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def layout(self) -> StateLayout:
        return self.loop.layout

    @property
    def discrete(self) -> bool:
        return self.loop.discrete

    def x(self, i: int) -> np.ndarray:
        return self.states[:, self.layout.x(i)]

    def z(self, i: int) -> np.ndarray:
        return self.states[:, self.layout.z(i)]

    def eta(self, i: int) -> np.ndarray:
        return self.states[:, self.layout.eta(i)]

    def S_hat(self, i: int) -> np.ndarray:
        q = self.layout.q_eta
        block = self.states[:, self.layout.shat].reshape(len(self), self.layout.N, q, q)
        return block[:, i]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, self.layout.v]

    @property
    def v_m(self) -> np.ndarray:
        return self.states[:, self.layout.v_m]

    def u(self, i: int) -> np.ndarray:
        return self.states @ self.loop.control_maps[i].T

    def e(self, i: int) -> np.ndarray:
        return self.states @ self.loop.error_maps[i].T


def _progress_reporter(on_progress: Optional[ProgressCallback], total: int) -> Callable[[int], None]:
    if on_progress is None:
        return lambda done: None
    every = max(1, total // 100)

    def report(done: int):
        if done % every == 0 or done == total:
            on_progress(done, total)

    return report


def _check_state(s: np.ndarray, t: float, limit: float, times, states, graph_index, loop):
    norm = float(np.linalg.norm(s))
    if not np.isfinite(norm) or norm > limit:
        partial = Trajectory(np.asarray(times), np.asarray(states), np.asarray(graph_index, dtype=int), loop)
        raise DivergenceError(
            f"state norm {norm:.3e} exceeded {limit:.1e} at t={t:g}",
            time=t, norm=norm, trajectory=partial,
        )


def integrate(
    loop: ClosedLoop,
    horizon: Optional[float] = None,
    step: Optional[float] = None,
    divergence_limit: Optional[float] = None,
    max_steps: Optional[int] = None,
    on_progress: Optional[ProgressCallback] = None,
) -> Trajectory:
    """
    Step the closed loop over [0, horizon]. Continuous loops take RK4 steps
    aligned so every switching instant is a sample; an interval whose length
    is not a multiple of `step` is split evenly into ceil(length/step)
    substeps and the refinement is recorded. Discrete loops take unit steps.

    `on_progress(done, total)` is called about every percent of the steps
    and once at the end.

    Raises:
        DimensionError: empty horizon or too many steps
        DivergenceError: non-finite or exploding state, partial trajectory attached
    """
    sc = loop.scenario
    horizon = sc.horizon if horizon is None else horizon
    h = sc.step if step is None else step
    limit = Config.DIVERGENCE_LIMIT if divergence_limit is None else divergence_limit
    max_steps = Config.MAX_STEPS if max_steps is None else max_steps
    if horizon <= 0:
        raise DimensionError(f"horizon must be positive, got {horizon}; the trajectory would be empty")
    if h <= 0:
        raise DimensionError(f"step must be positive, got {h}")

    sched = sc.topology
    s = loop.s0.copy()
    times: List[float] = [0.0]
    states: List[np.ndarray] = [s.copy()]
    graph_index: List[int] = [sched.index_at(0.0)]
    refinements: List[Dict[str, Any]] = []

    if loop.discrete:
        n_steps = int(round(horizon))
        if n_steps > max_steps:
            raise DimensionError(f"{n_steps} steps exceed the limit of {max_steps}")
        report = _progress_reporter(on_progress, n_steps)
        for k in range(n_steps):
            p = sched.index_at(float(k))
            s = loop.matrices[p] @ s
            times.append(float(k + 1))
            states.append(s.copy())
            graph_index.append(sched.index_at(float(k + 1)))
            _check_state(s, k + 1, limit, times, states, graph_index, loop)
            report(k + 1)
        return Trajectory(np.asarray(times), np.asarray(states), np.asarray(graph_index, dtype=int), loop)

    intervals = sched.intervals(horizon)
    total = sum(max(1, math.ceil((b - a) / h - 1e-9)) for a, b, _ in intervals)
    if total > max_steps:
        raise DimensionError(f"{total} steps exceed the limit of {max_steps}; raise the step or shorten the horizon")

    report = _progress_reporter(on_progress, total)
    done = 0
    for start, end, p in intervals:
        length = end - start
        n_steps = max(1, math.ceil(length / h - 1e-9))
        dt = length / n_steps
        if abs(dt - h) > 1e-12 * max(1.0, h):
            refinements.append({"start": start, "end": end, "step": dt, "substeps": n_steps})
        if loop.adaptive:
            f = loop.field(p)
            advance = lambda t, x: rk4_step(f, t, x, dt)
        else:
            Phi = loop.transition(p, dt)
            advance = lambda t, x: Phi @ x
        for k in range(n_steps):
            t = start + k * dt
            s = advance(t, s)
            t_next = end if k == n_steps - 1 else start + (k + 1) * dt
            times.append(t_next)
            states.append(s.copy())
            graph_index.append(p)
            _check_state(s, t_next, limit, times, states, graph_index, loop)
            done += 1
            report(done)

    if refinements:
        logger.info("refined %d interval(s) to land on switching instants", len(refinements))
    return Trajectory(np.asarray(times), np.asarray(states), np.asarray(graph_index, dtype=int), loop, refinements)


@dataclass
class AgentMetrics:
    agent: int
    final_error: float
    convergence_time: Optional[float]
    observer_error: Optional[float] = None
    observer_convergence_time: Optional[float] = None
    S_hat_error: Optional[float] = None
    steady_state_x: Optional[float] = None
    steady_state_u: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        out = {k: v for k, v in self.__dict__.items() if v is not None or k == "convergence_time"}
        if self.observer_error is not None:
            out["observer_convergence_time"] = self.observer_convergence_time
        return out


@dataclass
class Metrics:
    threshold: float
    window_start: float
    agents: List[AgentMetrics]

    @property
    def max_final_error(self) -> float:
        return max(a.final_error for a in self.agents)

    @property
    def converged(self) -> bool:
        return self.max_final_error < self.threshold

    @property
    def convergence_time(self) -> Optional[float]:
        times = [a.convergence_time for a in self.agents]
        return None if any(t is None for t in times) else max(times)

    @property
    def max_observer_error(self) -> Optional[float]:
        errors = [a.observer_error for a in self.agents if a.observer_error is not None]
        return max(errors) if errors else None

    @property
    def observer_convergence_time(self) -> Optional[float]:
        """Time after which every observer stays within the threshold of the leader"""
        tracked = [a for a in self.agents if a.observer_error is not None]
        if not tracked or any(a.observer_convergence_time is None for a in tracked):
            return None
        return max(a.observer_convergence_time for a in tracked)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "window_start": self.window_start,
            "converged": self.converged,
            "max_final_error": self.max_final_error,
            "convergence_time": self.convergence_time,
            "max_observer_error": self.max_observer_error,
            "observer_convergence_time": self.observer_convergence_time,
            "agents": [a.to_dict() for a in self.agents],
        }


def _convergence_time(times: np.ndarray, err: np.ndarray, threshold: float) -> Optional[float]:
    """First t after which the error stays below threshold"""
    bad = np.flatnonzero(err >= threshold)
    if bad.size == 0:
        return float(times[0])
    if bad[-1] == len(times) - 1:
        return None
    return float(times[bad[-1] + 1])


def metrics(tr: Trajectory, threshold: Optional[float] = None, final_window: Optional[float] = None) -> Metrics:
    """
    Per-agent tracking and observer errors over the final window
    (a fraction of the horizon), convergence times and steady-state
    distance from the regulator manifold x = X v, u = U v.
    """
    threshold = Config.THRESHOLD if threshold is None else threshold
    final_window = Config.FINAL_WINDOW if final_window is None else final_window
    T = float(tr.times[-1])
    window_start = (1.0 - final_window) * T
    mask = tr.times >= window_start - 1e-12
    layout = tr.layout
    gains = tr.loop.law.gains
    observer = gains.observer
    v_last = tr.v[-1]

    out = []
    for i in range(layout.N):
        err = np.abs(tr.e(i)).max(axis=1) if tr.e(i).shape[1] else np.zeros(len(tr))
        row = AgentMetrics(
            agent=i + 1,
            final_error=float(err[mask].max()),
            convergence_time=_convergence_time(tr.times, err, threshold),
        )
        if observer is not None:
            gap = np.linalg.norm(tr.eta(i) - tr.v_m, axis=1)
            row.observer_error = float(gap[mask].max())
            row.observer_convergence_time = _convergence_time(tr.times, gap, threshold)
            if layout.adaptive:
                row.S_hat_error = float(np.linalg.norm(tr.S_hat(i)[-1] - observer.S))
        g = gains.agents[i]
        row.steady_state_x = float(np.linalg.norm(tr.x(i)[-1] - g.X @ v_last))
        row.steady_state_u = float(np.linalg.norm(tr.u(i)[-1] - g.U @ v_last))
        out.append(row)
    return Metrics(threshold, window_start, out)


def _require_linear_static(loop: ClosedLoop, what: str) -> int:
    sched = loop.scenario.topology
    if not sched.is_static:
        raise PreconditionError(f"{what} needs a static graph")
    observer = loop.observer
    if observer is not None and observer.variant in (ObserverVariant.ADAPTIVE, ObserverVariant.SYNC_REF):
        raise PreconditionError(f"{what} does not apply to the {observer.variant.value} observer")
    return sched.active[0]


@dataclass
class SeparationReport:
    matched: bool
    max_error: float
    actual: List[complex]
    expected: List[complex]
    unmatched: List[complex] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        pair = lambda zs: [[z.real, z.imag] for z in zs]
        return {
            "matched": self.matched,
            "max_error": self.max_error,
            "unmatched": pair(self.unmatched),
        }


def verify_separation(loop: ClosedLoop, strict: bool = True) -> SeparationReport:
    """
    The spectrum of the agent part of the closed loop must be the union of
    σ(A_i + B_i K1_i), σ(A_Li) and σ of the observer error matrix.

    Raises:
        PreconditionError: switching graph or nonlinear observer
        StructuralMismatchError: spectra differ while `strict`
    """
    p = _require_linear_static(loop, "separation check")
    sc = loop.scenario
    layout = loop.layout
    part = layout.agent_part
    A_c = loop.matrices[p][part, part]
    actual = np.linalg.eigvals(A_c) if A_c.size else np.zeros(0, dtype=complex)

    expected = []
    for agent, g in zip(sc.agents, loop.law.gains.agents):
        expected.extend(np.linalg.eigvals(agent.A + agent.B @ g.K1))
        if loop.law.kind.uses_compensator:
            expected.extend(np.linalg.eigvals(g.A_L))
    if loop.observer is not None:
        expected.extend(np.linalg.eigvals(error_matrix(loop.observer, sc.topology.graphs[p])))
    expected = np.asarray(expected, dtype=complex)

    match = match_spectra(actual, expected, SEPARATION_TOL)
    report = SeparationReport(match.matched, match.max_error, list(actual), list(expected),
                              list(match.unmatched_actual) + list(match.unmatched_expected))
    if strict and not report.matched:
        raise StructuralMismatchError(
            f"closed-loop spectrum does not factor into the designed blocks (max error {match.max_error:.3e})",
            unmatched=report.unmatched,
        )
    return report


@dataclass(eq=False)
class SylvesterReport:
    X_c: np.ndarray
    residual: float
    sylvester_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {"residual": self.residual, "sylvester_residual": self.sylvester_residual}


def verify_sylvester_steady_state(loop: ClosedLoop) -> SylvesterReport:
    """
    Solve X_c S = A_c X_c + B_c for the agent part of the closed loop and
    report ‖C_c X_c + D_c‖, which vanishes when the loop regulates.

    Raises:
        PreconditionError: switching graph, nonlinear observer, A_c not
            stable, or σ(A_c) meeting σ(S)
    """
    p = _require_linear_static(loop, "steady-state check")
    layout = loop.layout
    part, vs = layout.agent_part, layout.v
    M = loop.matrices[p]
    A_c, B_c = M[part, part], M[part, vs]
    S = loop.scenario.exo.S
    stable = is_schur(A_c) if loop.discrete else is_hurwitz(A_c)
    if not stable:
        raise PreconditionError("closed-loop agent matrix is not stable")
    eig_a = np.linalg.eigvals(A_c)
    eig_s = np.linalg.eigvals(S)
    if eig_a.size and eig_s.size and np.min(np.abs(eig_a[:, None] - eig_s[None, :])) < 1e-8:
        raise PreconditionError("closed-loop spectrum intersects the exosystem spectrum")

    X_c = linalg.solve_sylvester(A_c, -S, -B_c)
    E = np.vstack(loop.error_maps)
    C_c, D_c = E[:, part], E[:, vs]
    residual = float(np.linalg.norm(C_c @ X_c + D_c, 2)) if E.size else 0.0
    syl = float(np.linalg.norm(X_c @ S - A_c @ X_c - B_c))
    return SylvesterReport(X_c, residual, syl)


@dataclass
class DecayReport:
    converged: bool
    final_norm: float
    times: np.ndarray
    norms: np.ndarray


def input_decay_check(
    A,
    forcing: Callable[[float], np.ndarray],
    horizon: float,
    step: Optional[float] = None,
    threshold: Optional[float] = None,
    x0=None,
) -> DecayReport:
    """
    Simulate ẋ = A x + forcing(t) with Hurwitz A and report whether the
    state has decayed below `threshold` at the horizon.

    Raises:
        PreconditionError: A not Hurwitz
    """
    step = Config.STEP if step is None else step
    threshold = Config.THRESHOLD if threshold is None else threshold
    A = as_matrix(A, "A")
    if not is_hurwitz(A):
        raise PreconditionError("input decay check needs a Hurwitz A")
    if horizon <= 0:
        raise DimensionError(f"horizon must be positive, got {horizon}")
    n = A.shape[0]
    x = np.ones(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    f = lambda t, x: A @ x + np.asarray(forcing(t), dtype=float).reshape(n)
    n_steps = max(1, math.ceil(horizon / step - 1e-9))
    dt = horizon / n_steps
    times = np.linspace(0.0, horizon, n_steps + 1)
    norms = np.empty(n_steps + 1)
    norms[0] = np.linalg.norm(x)
    for k in range(n_steps):
        x = rk4_step(f, times[k], x, dt)
        norms[k + 1] = np.linalg.norm(x)
    return DecayReport(bool(norms[-1] < threshold), float(norms[-1]), times, norms)


@dataclass
class OpenLoopRun:
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    e: np.ndarray


def simulate_open_loop(
    agent: PlantAgent,
    S,
    v0,
    horizon: float,
    step: Optional[float] = None,
    u: Optional[Callable[[float], np.ndarray]] = None,
) -> OpenLoopRun:
    """ẋ = A x + B u(t) + E v, v̇ = S v from the agent's own x0"""
    step = Config.STEP if step is None else step
    S = as_matrix(S, "S")
    q = S.shape[0]
    n = agent.n
    v0 = np.asarray(v0, dtype=float).reshape(q)
    if u is None:
        u = lambda t: np.zeros(agent.m)

    def f(t: float, s: np.ndarray) -> np.ndarray:
        x, v = s[:n], s[n:]
        return np.concatenate([agent.A @ x + agent.B @ u(t) + agent.E @ v, S @ v])

    n_steps = max(1, math.ceil(horizon / step - 1e-9))
    dt = horizon / n_steps
    times = np.linspace(0.0, horizon, n_steps + 1)
    traj = np.empty((n_steps + 1, n + q))
    traj[0] = np.concatenate([agent.x0, v0])
    for k in range(n_steps):
        traj[k + 1] = rk4_step(f, times[k], traj[k], dt)
    xs, vs = traj[:, :n], traj[:, n:]
    us = np.array([u(t) for t in times]).reshape(len(times), agent.m)
    es = xs @ agent.C.T + us @ agent.D.T + vs @ agent.F.T
    return OpenLoopRun(times, xs, vs, es)
