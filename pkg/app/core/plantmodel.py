"""
Data model for follower plants, the leader exosystem and whole scenarios,
plus the builders for containment and local exogenous signals.

Follower i (i = 1..N):

    ẋ_i = A_i x_i + B_i u_i + E_iu v_u + E_im v_m
    e_i = C_i x_i + D_i u_i + F_iu v_u + F_im v_m           (tracking error)
    y_mi = C_mi x_i + D_mi u_i + F_miu v_u + F_mim v_m      (measured output)

Leader: v̇_u = S_u v_u, v̇_m = S_m v_m, y_0 = C_m0 v_m.
Discrete scenarios use the same matrices as one-step maps.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from app.config import Config
from app.core.errors import DimensionError, PreconditionError
from app.core.numkit import (
    SPECTRUM_ATOL,
    as_matrix,
    pbh_detectable,
    pbh_stabilizable,
    spectrum,
)
from app.core.topology import (
    SwitchingSchedule,
    has_spanning_tree,
    reachable_from_leader,
    union_graph,
    verify_jointly_connected,
)

logger = logging.getLogger(__name__)


class LawKind(str, Enum):
    """Control law families"""
    DECENTRALIZED_FULL_INFO = "decentralized_full_info"
    DECENTRALIZED_MEASUREMENT = "decentralized_measurement"
    DISTRIBUTED_FULL_INFO = "distributed_full_info"
    DISTRIBUTED_MEASUREMENT = "distributed_measurement"
    SPECIAL_VM_ONLY = "special_vm_only"
    SPECIAL_VU_ONLY = "special_vu_only"

    @property
    def uses_observer(self) -> bool:
        """Leader signal reaches followers through a distributed observer"""
        return self in (LawKind.DISTRIBUTED_FULL_INFO, LawKind.DISTRIBUTED_MEASUREMENT, LawKind.SPECIAL_VM_ONLY)

    @property
    def uses_compensator(self) -> bool:
        """Follower state is reconstructed by a Luenberger compensator"""
        return self in (
            LawKind.DECENTRALIZED_MEASUREMENT,
            LawKind.DISTRIBUTED_MEASUREMENT,
            LawKind.SPECIAL_VM_ONLY,
            LawKind.SPECIAL_VU_ONLY,
        )


def _matrix(name: str, value, rows: int, cols: Optional[int] = None) -> np.ndarray:
    M = np.asarray(value, dtype=float) if value is not None else np.zeros((rows, cols or 0))
    if M.size == 0 and M.ndim < 2:
        M = np.zeros((rows, cols or 0))
    M = as_matrix(M, name)
    if M.shape[0] != rows or (cols is not None and M.shape[1] != cols):
        expected = f"{rows}x{cols}" if cols is not None else f"{rows} rows"
        raise DimensionError(f"{name} must be {expected}, got {M.shape[0]}x{M.shape[1]}")
    return M


def _vector(name: str, value, size: int) -> np.ndarray:
    if value is None:
        return np.zeros(size)
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.size != size:
        raise DimensionError(f"{name} must have {size} entries, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise DimensionError(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class Exosystem:
    """Leader dynamics split into unmeasured (v_u) and measured (v_m) parts"""
    S_u: np.ndarray
    S_m: np.ndarray
    C_m0: np.ndarray
    v0: Optional[np.ndarray] = None

    def __post_init__(self):
        S_u = np.asarray(self.S_u, dtype=float)
        q_u = S_u.shape[0] if S_u.ndim == 2 else 0
        S_u = _matrix("S_u", S_u, q_u, q_u)
        S_m = np.asarray(self.S_m, dtype=float)
        q_m = S_m.shape[0] if S_m.ndim == 2 else 0
        S_m = _matrix("S_m", S_m, q_m, q_m)
        C_m0 = np.asarray(self.C_m0, dtype=float)
        p0 = C_m0.shape[0] if C_m0.ndim == 2 else 0
        C_m0 = _matrix("C_m0", C_m0, p0, q_m)
        object.__setattr__(self, "S_u", S_u)
        object.__setattr__(self, "S_m", S_m)
        object.__setattr__(self, "C_m0", C_m0)
        object.__setattr__(self, "v0", _vector("v0", self.v0, q_u + q_m))

    @property
    def q_u(self) -> int:
        return self.S_u.shape[0]

    @property
    def q_m(self) -> int:
        return self.S_m.shape[0]

    @property
    def q(self) -> int:
        return self.q_u + self.q_m

    @property
    def p0(self) -> int:
        return self.C_m0.shape[0]

    @property
    def S(self) -> np.ndarray:
        return linalg.block_diag(self.S_u, self.S_m) if self.q else np.zeros((0, 0))

    @property
    def C0(self) -> np.ndarray:
        return np.hstack([np.zeros((self.p0, self.q_u)), self.C_m0])

    def stable_modes(self, discrete: bool = False) -> List[complex]:
        """Eigenvalues of S that decay (not needed for regulation, only warned about)"""
        if discrete:
            return [ev.value for ev in spectrum(self.S) if abs(ev.value) < 1.0 - SPECTRUM_ATOL]
        return [ev.value for ev in spectrum(self.S) if ev.value.real < -SPECTRUM_ATOL]


@dataclass(frozen=True, eq=False)
class PlantAgent:
    """One follower's matrices; unmeasured/measured column split follows (q_u, q_m)"""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E_u: np.ndarray
    E_m: np.ndarray
    C_m: np.ndarray
    D_m: np.ndarray
    F_mu: np.ndarray
    F_mm: np.ndarray
    F_u: np.ndarray
    F_m: np.ndarray
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape[0]}x{A.shape[1]}")
        n = A.shape[0]
        B = _matrix("B", self.B, n)
        m = B.shape[1]
        C = as_matrix(self.C, "C")
        if C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {C.shape[1]}")
        p = C.shape[0]
        E_u = _matrix("E_u", self.E_u, n)
        E_m = _matrix("E_m", self.E_m, n)
        q_u, q_m = E_u.shape[1], E_m.shape[1]
        C_m = as_matrix(self.C_m, "C_m")
        if C_m.shape[1] != n:
            raise DimensionError(f"C_m must have {n} columns, got {C_m.shape[1]}")
        p_m = C_m.shape[0]
        values = {
            "A": A, "B": B, "C": C, "C_m": C_m, "E_u": E_u, "E_m": E_m,
            "D": _matrix("D", self.D, p, m),
            "D_m": _matrix("D_m", self.D_m, p_m, m),
            "F_mu": _matrix("F_mu", self.F_mu, p_m, q_u),
            "F_mm": _matrix("F_mm", self.F_mm, p_m, q_m),
            "F_u": _matrix("F_u", self.F_u, p, q_u),
            "F_m": _matrix("F_m", self.F_m, p, q_m),
            "x0": _vector("x0", self.x0, n),
        }
        for name, value in values.items():
            object.__setattr__(self, name, value)

    @classmethod
    def create(
        cls,
        A,
        B,
        C,
        q_u: int = 0,
        q_m: int = 0,
        D=None,
        E_u=None,
        E_m=None,
        C_m=None,
        D_m=None,
        F_mu=None,
        F_mm=None,
        F_u=None,
        F_m=None,
        x0=None,
    ) -> "PlantAgent":
        """
        Build with zero defaults. Without explicit measurement matrices the
        agent measures its own tracking error.
        """
        A = as_matrix(A, "A")
        B = as_matrix(B, "B")
        C = as_matrix(C, "C")
        n, m, p = A.shape[0], B.shape[1], C.shape[0]
        D = np.zeros((p, m)) if D is None else D
        E_u = np.zeros((n, q_u)) if E_u is None else E_u
        E_m = np.zeros((n, q_m)) if E_m is None else E_m
        F_u = np.zeros((p, q_u)) if F_u is None else F_u
        F_m = np.zeros((p, q_m)) if F_m is None else F_m
        if C_m is None:
            C_m, D_m, F_mu, F_mm = C, D, F_u, F_m
        C_m = as_matrix(C_m, "C_m")
        p_m = C_m.shape[0]
        D_m = np.zeros((p_m, m)) if D_m is None else D_m
        F_mu = np.zeros((p_m, q_u)) if F_mu is None else F_mu
        F_mm = np.zeros((p_m, q_m)) if F_mm is None else F_mm
        return cls(A, B, C, D, E_u, E_m, C_m, D_m, F_mu, F_mm, F_u, F_m, x0)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def p_m(self) -> int:
        return self.C_m.shape[0]

    @property
    def q_u(self) -> int:
        return self.E_u.shape[1]

    @property
    def q_m(self) -> int:
        return self.E_m.shape[1]

    @property
    def E(self) -> np.ndarray:
        return np.hstack([self.E_u, self.E_m])

    @property
    def F(self) -> np.ndarray:
        return np.hstack([self.F_u, self.F_m])

    @property
    def F_meas(self) -> np.ndarray:
        return np.hstack([self.F_mu, self.F_mm])

    def composite(self, S_u: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(Ā, B̄, C̄) of the plant augmented with the unmeasured exosystem"""
        q_u = self.q_u
        A_bar = np.block([[self.A, self.E_u], [np.zeros((q_u, self.n)), S_u]])
        B_bar = np.vstack([self.B, np.zeros((q_u, self.m))])
        C_bar = np.hstack([self.C_m, self.F_mu])
        return A_bar, B_bar, C_bar

    def replace(self, **changes) -> "PlantAgent":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LawSettings:
    """Law selection and observer design overrides"""
    kind: LawKind = LawKind.DISTRIBUTED_MEASUREMENT
    observer: Optional[str] = None
    gain_rule: Optional[str] = None
    mu: Optional[float] = None
    mu_scale: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    observer_init: Union[str, Tuple[Tuple[float, ...], ...]] = "zero"
    adaptive_init: str = "zero"
    threshold: Optional[float] = None
    window: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if self.mu is not None and self.mu < 0:
            raise PreconditionError(f"mu must be nonnegative, got {self.mu}")
        if self.mu_scale <= 0:
            raise PreconditionError(f"mu_scale must be positive, got {self.mu_scale}")
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise PreconditionError("adaptive observer gains mu1 and mu2 must be positive")
        if isinstance(self.observer_init, str):
            if self.observer_init not in ("zero", "leader"):
                raise PreconditionError(f"observer_init must be 'zero', 'leader' or explicit values, got {self.observer_init}")
        else:
            object.__setattr__(self, "observer_init", tuple(tuple(float(x) for x in row) for row in self.observer_init))
        if self.adaptive_init not in ("zero", "leader"):
            raise PreconditionError(f"adaptive_init must be 'zero' or 'leader', got {self.adaptive_init}")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Followers, leader, communication schedule and simulation settings"""
    agents: Tuple[PlantAgent, ...]
    exo: Exosystem
    topology: SwitchingSchedule
    horizon: float
    step: float = field(default_factory=lambda: Config.STEP)
    law: LawSettings = field(default_factory=LawSettings)
    discrete: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise DimensionError("scenario has no agents")
        if self.topology.follower_count != len(self.agents):
            raise DimensionError(
                f"topology has {self.topology.follower_count} followers but scenario has {len(self.agents)} agents"
            )
        for i, agent in enumerate(self.agents, start=1):
            if (agent.q_u, agent.q_m) != (self.exo.q_u, self.exo.q_m):
                raise DimensionError(
                    f"agent {i} exogenous split ({agent.q_u}, {agent.q_m}) does not match "
                    f"the exosystem ({self.exo.q_u}, {self.exo.q_m})"
                )
        if self.horizon < 0:
            raise DimensionError(f"horizon must be nonnegative, got {self.horizon}")
        if self.step <= 0:
            raise DimensionError(f"step must be positive, got {self.step}")
        if self.discrete:
            if float(self.horizon) != round(self.horizon):
                raise DimensionError(f"discrete horizon must be an integer number of steps, got {self.horizon}")
            if any(float(t) != round(t) for t in self.topology.switch_times):
                raise DimensionError("discrete switching instants must be integers")

    @property
    def N(self) -> int:
        return len(self.agents)

    def with_overrides(self, **changes) -> "Scenario":
        law_changes = {k: changes.pop(k) for k in list(changes) if k in {f.name for f in dataclasses.fields(LawSettings)}}
        law = dataclasses.replace(self.law, **law_changes) if law_changes else self.law
        return dataclasses.replace(self, law=law, **changes)

    def default_window(self) -> float:
        """Joint-connectivity window when none is configured"""
        if self.law.window is not None:
            return self.law.window
        if self.topology.period is not None:
            return self.topology.period
        return self.topology.switch_times[-1] + self.topology.dwell


@dataclass
class CheckResult:
    """Outcome of one named assumption check"""
    name: str
    passed: bool
    severity: str = "error"
    agent: Optional[int] = None
    detail: str = ""
    data: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        out = {"name": self.name, "passed": self.passed, "severity": self.severity, "detail": self.detail}
        if self.agent is not None:
            out["agent"] = self.agent
        if self.data:
            out["data"] = self.data
        return out


@dataclass
class AssumptionReport:
    checks: List[CheckResult] = field(default_factory=list)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed and c.severity == "error"]

    @property
    def warnings(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed and c.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.failures

    def find(self, name: str, agent: Optional[int] = None) -> List[CheckResult]:
        return [c for c in self.checks if c.name == name and (agent is None or c.agent == agent)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "failures": [c.name for c in self.failures],
            "warnings": [c.name for c in self.warnings],
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_text(self) -> str:
        glyph = {True: "✓", False: "✗"}
        lines = []
        for c in self.checks:
            mark = glyph[c.passed] if c.passed or c.severity == "error" else ("⚠️" if c.severity == "warning" else "·")
            who = f" [agent {c.agent}]" if c.agent is not None else ""
            lines.append(f"{mark} {c.name}{who}" + (f": {c.detail}" if c.detail else ""))
        lines.append("✓ all required checks passed" if self.ok else f"✗ failed: {', '.join(sorted({c.name for c in self.failures}))}")
        return "\n".join(lines)


def _topology_checks(sc: Scenario, report: AssumptionReport):
    sched = sc.topology
    observer = sc.law.observer or ("discrete" if sc.discrete else "continuous")
    needs_graph = sc.law.kind.uses_observer
    severity = "error" if needs_graph else "info"

    if observer == "sync_ref":
        union = union_graph(sched.graphs)
        ok = has_spanning_tree(union)
        report.add(CheckResult(
            "follower-connected", ok, severity,
            detail="follower union graph has a spanning tree" if ok else "follower union graph has no spanning tree",
        ))
        return

    if sched.is_static:
        graph = sched.graphs[sched.active[0]]
        ok = reachable_from_leader(graph)
        report.add(CheckResult(
            "leader-reachable", ok, severity,
            detail="every follower is reachable from the leader" if ok else "some follower is not reachable from the leader",
        ))
    else:
        window = sc.default_window()
        verdict = verify_jointly_connected(sched, window, horizon=max(sc.horizon, window))
        detail = f"certified with window {window:g}" if verdict.certified else (
            f"not certified: window [{verdict.failing_window[0]:g}, {verdict.failing_window[1]:g}) does not reach every follower"
        )
        report.add(CheckResult("jointly-connected", verdict.certified, severity, detail=detail, data=verdict.to_dict()))

    symmetric = all(g.is_symmetric() for g in sched.graphs)
    if observer == "discrete":
        sym_severity = severity
    else:
        sym_severity = "warning" if needs_graph and not sched.is_static else "info"
    report.add(CheckResult(
        "symmetric-graphs", symmetric, sym_severity,
        detail="all follower subgraphs are undirected" if symmetric else "some follower subgraph is directed",
    ))


def validate_assumptions(sc: Scenario) -> AssumptionReport:
    """
    Per-agent stabilizability, detectability and regulator solvability,
    the exosystem spectrum warning and the topology checks.
    Failures are carried in the report, never raised.
    """
    from app.core.synthesis import solve_regulator

    report = AssumptionReport()
    stable = sc.exo.stable_modes(sc.discrete)
    report.add(CheckResult(
        "exosystem-spectrum", not stable, "warning",
        detail="no decaying exosystem modes" if not stable else
        f"exosystem has decaying modes {', '.join(f'{z:.4g}' for z in stable)}; they do not affect tracking",
    ))

    needs_detectability = sc.law.kind.uses_compensator
    for i, agent in enumerate(sc.agents, start=1):
        ok = pbh_stabilizable(agent.A, agent.B, discrete=sc.discrete)
        report.add(CheckResult("stabilizable", ok, "error", agent=i,
                               detail="" if ok else "(A, B) has an uncontrollable unstable mode"))

        A_bar, _, C_bar = agent.composite(sc.exo.S_u)
        ok = pbh_detectable(C_bar, A_bar, discrete=sc.discrete)
        report.add(CheckResult("detectable", ok, "error" if needs_detectability else "info", agent=i,
                               detail="" if ok else "composite pair ([C_m, F_mu], [[A, E_u], [0, S_u]]) is not detectable"))

        solution = solve_regulator(agent, sc.exo.S, strict=False)
        report.add(CheckResult("regulator-solvable", solution.exact, "error", agent=i,
                               detail=f"residual {solution.residual:.3e}",
                               data={"residual": solution.residual}))

    _topology_checks(sc, report)
    return report


def build_containment(
    leaders: Sequence[Tuple[Any, Any]],
    alphas: Sequence[float],
    followers: Sequence[PlantAgent],
    topology: SwitchingSchedule,
    horizon: float,
    step: Optional[float] = None,
    law: Optional[LawSettings] = None,
    name: str = "",
) -> Scenario:
    """
    Stack l leaders into one exosystem and steer every follower output to
    r = F_2 v, the alpha-weighted convex combination of leader states.

    Follower templates carry F_1i (their own exogenous term) in F_m; the
    built agents get F_i = F_1i - F_2 and measure their own tracking error.
    """
    step = Config.STEP if step is None else step
    if len(leaders) < 2:
        raise PreconditionError(f"containment needs at least two leaders, got {len(leaders)}")
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if alphas.size != len(leaders):
        raise DimensionError(f"need one weight per leader, got {alphas.size} for {len(leaders)}")
    if np.any(alphas < 0) or abs(alphas.sum() - 1.0) > 1e-12:
        raise PreconditionError(f"containment weights must be nonnegative and sum to 1, got {alphas.tolist()}")

    blocks = [as_matrix(S_i, f"S_{k + 1}") for k, (S_i, _) in enumerate(leaders)]
    q0 = blocks[0].shape[0]
    if any(b.shape != (q0, q0) for b in blocks):
        raise DimensionError("all leaders must share the same square state dimension")
    S = linalg.block_diag(*blocks)
    v0 = np.concatenate([_vector(f"v0 of leader {k + 1}", v, q0) for k, (_, v) in enumerate(leaders)])
    F2 = np.kron(alphas.reshape(1, -1), np.eye(q0))
    q = S.shape[0]

    built = []
    for i, tpl in enumerate(followers, start=1):
        if tpl.q_u != 0 or tpl.q_m != q:
            raise DimensionError(f"follower {i} template must have q_u = 0 and q_m = {q}")
        if tpl.p != q0:
            raise DimensionError(f"follower {i} output dimension {tpl.p} must equal leader dimension {q0}")
        F_i = tpl.F_m - F2
        built.append(tpl.replace(F_m=F_i, C_m=tpl.C, D_m=tpl.D, F_mu=np.zeros((tpl.p, 0)), F_mm=F_i))

    exo = Exosystem(S_u=np.zeros((0, 0)), S_m=S, C_m0=F2, v0=v0)
    return Scenario(tuple(built), exo, topology, horizon, step, law or LawSettings(), name=name)


@dataclass(frozen=True, eq=False)
class LocalAgent:
    """Agent sensing only its own exosystem v_i with dynamics S_i"""
    agent: PlantAgent
    S: np.ndarray
    v0: Optional[np.ndarray] = None


def localize_exogenous(
    local_agents: Sequence[LocalAgent],
    topology: SwitchingSchedule,
    horizon: float,
    step: Optional[float] = None,
    law: Optional[LawSettings] = None,
    name: str = "",
) -> Scenario:
    """
    Stack per-agent local exosystems into v = col(v_1, ..., v_N) with
    S = blockdiag(S_1, ..., S_N); agent i's exogenous columns are zero
    outside its own block. All of v is measured (C_m0 = I).
    """
    step = Config.STEP if step is None else step
    blocks = []
    for k, local in enumerate(local_agents, start=1):
        S_k = as_matrix(local.S, f"S_{k}")
        if S_k.shape[0] != S_k.shape[1]:
            raise DimensionError(f"S_{k} must be square")
        if local.agent.q_u != 0 or local.agent.q_m != S_k.shape[0]:
            raise DimensionError(f"agent {k} exogenous columns must match its local exosystem of size {S_k.shape[0]}")
        blocks.append(S_k)
    sizes = [b.shape[0] for b in blocks]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    q = int(offsets[-1])

    def pad(M: np.ndarray, k: int) -> np.ndarray:
        out = np.zeros((M.shape[0], q))
        out[:, offsets[k]:offsets[k + 1]] = M
        return out

    agents = []
    v0 = np.zeros(q)
    for k, local in enumerate(local_agents):
        a = local.agent
        agents.append(a.replace(
            E_m=pad(a.E_m, k), F_mm=pad(a.F_mm, k), F_m=pad(a.F_m, k),
        ))
        v0[offsets[k]:offsets[k + 1]] = _vector(f"v0 of agent {k + 1}", local.v0, sizes[k])

    S = linalg.block_diag(*blocks)
    exo = Exosystem(S_u=np.zeros((0, 0)), S_m=S, C_m0=np.eye(q), v0=v0)
    law = law or LawSettings(kind=LawKind.DECENTRALIZED_FULL_INFO)
    return Scenario(tuple(agents), exo, topology, horizon, step, law, name=name)
