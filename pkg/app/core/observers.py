"""
Distributed observers of the leader signal and their gain design rules.

Variants:
  continuous  η̇_i = S η_i + μ L0 Σ_j a_ij C0 (η_j - η_i),  η_0 = v_m
  discrete    η_i(t+1) = S η_i + μ L0 Σ_j a_ij C0 (η_j - η_i)
  adaptive    Ŝ̇_i = μ1 Σ_j a_ij (Ŝ_j - Ŝ_i), η̇_i = Ŝ_i η_i + μ2 Σ_j a_ij (η_j - η_i),
              with Ŝ_0 = S, η_0 = v
  sync_ref    leaderless version of the continuous observer over followers only
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.config import Config
from app.core.errors import ConnectivityError, PreconditionError, SynthesisError
from app.core.integrators import rk4_step, rk4_transition
from app.core.numkit import (
    SPECTRUM_ATOL,
    is_hurwitz,
    pbh_detectable,
    pbh_observable,
    real_jordan_form,
    solve_are,
    solve_lyap_marginal,
    spectrum,
)
from app.core.plantmodel import Scenario
from app.core.topology import (
    SwitchingSchedule,
    WeightedDigraph,
    algebraic_connectivity,
    consensus_weights,
    h_matrix,
    has_spanning_tree,
    laplacian,
    min_real_eig_h,
    union_graph,
)

logger = logging.getLogger(__name__)


class ObserverVariant(str, Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"
    ADAPTIVE = "adaptive"
    SYNC_REF = "sync_ref"


class GainRule(str, Enum):
    """Which design rule produced the observer gains"""
    LYAPUNOV_SWITCHING = "lyapunov-switching"
    RICCATI_STATIC = "riccati-static"
    IDENTITY_OUTPUT = "identity-output"
    REAL_JORDAN_DISCRETE = "real-jordan-discrete"
    ADAPTIVE = "adaptive"
    SYNC_LYAPUNOV = "sync-lyapunov"
    SYNC_RICCATI = "sync-riccati"
    SYNC_IDENTITY = "sync-identity"


@dataclass(frozen=True, eq=False)
class ObserverGains:
    variant: ObserverVariant
    rule: GainRule
    mu: float
    L0: np.ndarray
    S: np.ndarray
    C0: np.ndarray
    mu1: float = 1.0
    mu2: float = 1.0
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def q(self) -> int:
        return self.S.shape[0]

    @property
    def coupling(self) -> np.ndarray:
        """L0 C0; the adaptive observer couples full states"""
        if self.variant == ObserverVariant.ADAPTIVE:
            return np.eye(self.q)
        return self.L0 @ self.C0

    def with_mu(self, mu: float) -> "ObserverGains":
        notes = dict(self.notes, mu_source="override")
        if self.variant == ObserverVariant.ADAPTIVE:
            return ObserverGains(self.variant, self.rule, mu, self.L0, self.S, self.C0, mu, mu, notes)
        return ObserverGains(self.variant, self.rule, mu, self.L0, self.S, self.C0, self.mu1, self.mu2, notes)


@dataclass(frozen=True, eq=False)
class ObserverBank:
    """Per-follower estimates; S_hat only for the adaptive variant"""
    variant: ObserverVariant
    eta: np.ndarray
    S_hat: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.eta.shape[0]


def _is_identity(M: np.ndarray) -> bool:
    return M.shape[0] == M.shape[1] and np.array_equal(M, np.eye(M.shape[0]))


def eigenvalue_formula(S: np.ndarray, H: np.ndarray, mu: float) -> np.ndarray:
    """The multiset {λ_i(S) - μ λ_j(H)}"""
    s = spectrum(S).array
    h = spectrum(H).array
    return (s[:, None] - mu * h[None, :]).reshape(-1)


def design_gain_switching_undirected(S: np.ndarray, C0: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    μ = 1 and L0 = P C0ᵀ with P from the marginal Lyapunov inequality.

    Raises:
        SynthesisError: (C0, S) not observable
        MarginalStabilityError: S not marginally stable
    """
    if not pbh_observable(C0, S):
        raise SynthesisError("(C_m0, S_m) is not observable", check="observable")
    P = solve_lyap_marginal(S)
    return 1.0, P @ C0.T


def design_gain_static(S: np.ndarray, C0: np.ndarray, delta: float) -> Tuple[float, np.ndarray]:
    """μ = 1/δ and L0 = P C0ᵀ with P from S P + P Sᵀ - P C0ᵀ C0 P + I = 0"""
    if not delta > 0:
        raise ConnectivityError(f"min real part of σ(H) must be positive, got {delta}")
    if not pbh_detectable(C0, S):
        raise SynthesisError("(C_m0, S_m) is not detectable", check="detectable")
    P = solve_are(S.T, C0.T)
    return 1.0 / delta, P @ C0.T


def design_gain_identity(
    S: np.ndarray,
    Hs: Sequence[np.ndarray],
    mu: Optional[float] = None,
    delta: Optional[float] = None,
) -> float:
    """
    μ for L0 = I. With δ the static value (1 + max(0, max Re σ(S)))/δ + 1 is
    used; otherwise the caller's μ (default 1). The eigenvalue formula is
    checked per graph as a guard.
    """
    max_re = spectrum(S).max_real
    if delta is not None:
        mu = (1.0 + max(0.0, max_re)) / delta + 1.0 if mu is None else mu
        limit = -SPECTRUM_ATOL
    else:
        if max_re > SPECTRUM_ATOL:
            raise SynthesisError("S has eigenvalues with positive real part; no switching identity-output gain",
                                 check="exosystem-spectrum")
        mu = 1.0 if mu is None else mu
        limit = SPECTRUM_ATOL
    for p, H in enumerate(Hs):
        worst = eigenvalue_formula(S, H, mu).real.max()
        if worst > limit:
            raise SynthesisError(
                f"eigenvalue formula guard failed on graph {p}: max real part {worst:.4g} with mu={mu:g}",
                check="eigenvalue-formula",
            )
    return float(mu)


def design_gain_discrete(
    S: np.ndarray,
    C0: np.ndarray,
    Hs: Sequence[np.ndarray],
) -> Tuple[float, np.ndarray, Dict[str, Any]]:
    """
    Discrete observer gain through the real Jordan form of Sᵀ.

    With Sᵀ = P⁻¹ Ā P and B̄ = P C0ᵀ the gain is L0 = S Pᵀ P C0ᵀ and
    μ = min_p 1 / (‖H_p‖ ‖Āᵀ B̄ B̄ᵀ Ā‖).

    Raises:
        PreconditionError: asymmetric H, eigenvalue outside the unit disc,
            non-semisimple unit-modulus eigenvalue, non-diagonalizable S
        SynthesisError: (C0, S) not observable
    """
    for p, H in enumerate(Hs):
        if not np.allclose(H, H.T, rtol=0.0, atol=1e-12):
            raise PreconditionError(f"H of graph {p} is not symmetric")
    for ev in spectrum(S):
        modulus = abs(ev.value)
        if modulus > 1.0 + SPECTRUM_ATOL:
            raise PreconditionError(f"S has eigenvalue {ev.value:.6g} outside the unit circle")
        if modulus >= 1.0 - SPECTRUM_ATOL and not ev.semisimple:
            raise PreconditionError(f"unit-modulus eigenvalue {ev.value:.6g} of S is not semi-simple")
    if not pbh_observable(C0, S):
        raise SynthesisError("(C_m0, S_m) is not observable", check="observable")

    A_bar, P = real_jordan_form(S.T)
    B_bar = P @ C0.T
    L0 = S @ P.T @ P @ C0.T
    G = A_bar.T @ B_bar @ B_bar.T @ A_bar
    g = np.linalg.norm(G, 2)
    bounds = [1.0 / (np.linalg.norm(H, 2) * g) for H in Hs if np.linalg.norm(H, 2) > 0]
    if not bounds:
        raise ConnectivityError("every graph in the family is empty")
    mu = float(min(bounds))
    return mu, L0, {"mu_bound": mu, "A_bar": A_bar.tolist()}


def _observer_variant(sc: Scenario) -> ObserverVariant:
    if sc.law.observer:
        variant = ObserverVariant(sc.law.observer)
    else:
        variant = ObserverVariant.DISCRETE if sc.discrete else ObserverVariant.CONTINUOUS
    if sc.discrete != (variant == ObserverVariant.DISCRETE):
        raise PreconditionError(f"observer '{variant.value}' does not match a {'discrete' if sc.discrete else 'continuous'} scenario")
    if variant != ObserverVariant.CONTINUOUS and sc.exo.q_u:
        raise PreconditionError(f"the {variant.value} observer estimates the whole leader state; q_u must be 0")
    return variant


def design_sync_ref(S: np.ndarray, C0: np.ndarray, sched: SwitchingSchedule, mu: Optional[float] = None) -> ObserverGains:
    """Gains for the leaderless synchronized reference generator"""
    union = union_graph(sched.graphs)
    if not has_spanning_tree(union):
        raise ConnectivityError("follower union graph has no spanning tree")
    symmetric = all(g.is_symmetric() for g in sched.graphs)
    notes: Dict[str, Any] = {}

    marginal = all(
        ev.value.real <= SPECTRUM_ATOL and (ev.value.real < -SPECTRUM_ATOL or ev.semisimple)
        for ev in spectrum(S)
    )
    if symmetric and marginal and pbh_observable(C0, S):
        P = solve_lyap_marginal(S)
        rule, mu_d, L0 = GainRule.SYNC_LYAPUNOV, 1.0, P @ C0.T
    elif sched.is_static and pbh_detectable(C0, S):
        graph = sched.graphs[sched.active[0]]
        lam2 = algebraic_connectivity(graph)
        P = solve_are(S.T, C0.T)
        rule, mu_d, L0 = GainRule.SYNC_RICCATI, max(1.0, 1.0 / lam2), P @ C0.T
        notes["algebraic_connectivity"] = lam2
    elif _is_identity(C0) and spectrum(S).max_real <= SPECTRUM_ATOL:
        rule, mu_d, L0 = GainRule.SYNC_IDENTITY, 1.0, np.eye(S.shape[0])
    else:
        raise SynthesisError("no synchronized reference generator rule applies to this graph family and S",
                             check="observer-design")
    notes["limit"] = "predicted" if sched.is_static or symmetric else "empirical"
    notes["mu_source"] = "user" if mu is not None else "rule"
    return ObserverGains(ObserverVariant.SYNC_REF, rule, float(mu if mu is not None else mu_d), L0, S, C0, notes=notes)


def design_observer(sc: Scenario) -> Optional[ObserverGains]:
    """
    Pick the observer variant and gain rule for a scenario.

    Returns None when the law does not use a distributed observer.
    """
    if not sc.law.kind.uses_observer:
        return None
    variant = _observer_variant(sc)

    S, C0 = sc.exo.S_m, sc.exo.C_m0
    sched = sc.topology
    Hs = [h.matrix for h in sched.h_matrices()]
    user_mu = sc.law.mu
    notes: Dict[str, Any] = {"mu_source": "user" if user_mu is not None else "rule"}

    if variant == ObserverVariant.SYNC_REF:
        gains = design_sync_ref(S, C0, sched, user_mu)
        return _scaled(gains, sc.law.mu_scale)

    if variant == ObserverVariant.ADAPTIVE:
        for ev in spectrum(S):
            if ev.value.real > SPECTRUM_ATOL or (abs(ev.value.real) <= SPECTRUM_ATOL and not ev.semisimple):
                raise PreconditionError(f"adaptive observer needs a marginally stable S; eigenvalue {ev.value:.6g}")
        mu1 = sc.law.mu1 if user_mu is None else user_mu
        mu2 = sc.law.mu2 if user_mu is None else user_mu
        gains = ObserverGains(variant, GainRule.ADAPTIVE, mu2, np.eye(S.shape[0]), S, np.eye(S.shape[0]),
                              mu1=mu1, mu2=mu2, notes=notes)
        logger.info("adaptive observer with mu1=%g mu2=%g", mu1, mu2)
        return gains

    if variant == ObserverVariant.DISCRETE:
        mu, L0, extra = design_gain_discrete(S, C0, Hs)
        notes.update(extra)
        gains = ObserverGains(variant, GainRule.REAL_JORDAN_DISCRETE, user_mu if user_mu is not None else mu,
                              L0, S, C0, notes=notes)
        return _scaled(gains, sc.law.mu_scale)

    rule = GainRule(sc.law.gain_rule) if sc.law.gain_rule else None
    if rule is None:
        if sched.is_static:
            rule = GainRule.RICCATI_STATIC
        elif all(g.is_symmetric() for g in sched.graphs):
            rule = GainRule.LYAPUNOV_SWITCHING
        elif _is_identity(C0):
            rule = GainRule.IDENTITY_OUTPUT
        else:
            raise SynthesisError("directed switching graphs need C_m0 = I (identity-output rule)",
                                 check="symmetric-graphs")

    if rule == GainRule.RICCATI_STATIC:
        if not sched.is_static:
            raise PreconditionError("riccati-static rule needs a static graph")
        delta = min_real_eig_h(Hs[sched.active[0]])
        mu, L0 = design_gain_static(S, C0, delta)
        notes["delta"] = delta
    elif rule == GainRule.LYAPUNOV_SWITCHING:
        if not all(g.is_symmetric() for g in sched.graphs):
            raise PreconditionError("lyapunov-switching rule needs undirected graphs")
        mu, L0 = design_gain_switching_undirected(S, C0)
    elif rule == GainRule.IDENTITY_OUTPUT:
        if not _is_identity(C0):
            raise PreconditionError("identity-output rule needs C_m0 = I")
        L0 = np.eye(S.shape[0])
        if sched.is_static:
            delta = min_real_eig_h(Hs[sched.active[0]])
            notes["delta"] = delta
            mu = design_gain_identity(S, [Hs[sched.active[0]]], user_mu, delta)
        else:
            mu = design_gain_identity(S, Hs, user_mu)
    else:
        raise PreconditionError(f"gain rule '{rule.value}' does not apply to the continuous observer")

    if user_mu is not None:
        mu = user_mu
    logger.info("observer rule %s with mu=%g", rule.value, mu)
    return _scaled(ObserverGains(variant, rule, float(mu), L0, S, C0, notes=notes), sc.law.mu_scale)


def _scaled(gains: ObserverGains, scale: float) -> ObserverGains:
    if scale == 1.0:
        return gains
    notes = dict(gains.notes, mu_scale=scale)
    return ObserverGains(gains.variant, gains.rule, gains.mu * scale, gains.L0, gains.S, gains.C0,
                         gains.mu1, gains.mu2, notes)


def coupling_matrix(gains: ObserverGains, graph: WeightedDigraph) -> np.ndarray:
    """H for the leader-driven variants, the follower Laplacian for sync_ref"""
    if gains.variant == ObserverVariant.SYNC_REF:
        return laplacian(graph, followers_only=True)
    return h_matrix(graph).matrix


def error_matrix(gains: ObserverGains, graph: WeightedDigraph) -> np.ndarray:
    """(I_N ⊗ S) - μ (H ⊗ L0 C0) for the active graph"""
    H = coupling_matrix(gains, graph)
    N = H.shape[0]
    return np.kron(np.eye(N), gains.S) - gains.mu * np.kron(H, gains.coupling)


def leader_input_matrix(gains: ObserverGains, graph: WeightedDigraph) -> np.ndarray:
    """μ (Δ 1 ⊗ L0 C0): how the leader state enters the stacked estimates"""
    N = graph.follower_count
    if gains.variant == ObserverVariant.SYNC_REF:
        return np.zeros((N * gains.q, gains.q))
    return gains.mu * np.kron(graph.leader_weights.reshape(-1, 1), gains.coupling)


def initial_bank(sc: Scenario, gains: ObserverGains) -> ObserverBank:
    """Initial estimates from the law's observer_init / adaptive_init settings"""
    N, q = sc.N, gains.q
    init = sc.law.observer_init
    v_m = sc.exo.v0[sc.exo.q_u:]
    if init == "zero":
        eta = np.zeros((N, q))
    elif init == "leader":
        eta = np.tile(v_m, (N, 1))
    else:
        eta = np.asarray(init, dtype=float)
        if eta.shape != (N, q):
            raise PreconditionError(f"observer_init must give {N} vectors of length {q}, got shape {eta.shape}")
    S_hat = None
    if gains.variant == ObserverVariant.ADAPTIVE:
        S_hat = np.tile(gains.S, (N, 1, 1)) if sc.law.adaptive_init == "leader" else np.zeros((N, q, q))
    return ObserverBank(gains.variant, eta, S_hat)


def sync_ref_limit(gains: ObserverGains, graph: WeightedDigraph, eta0: np.ndarray, t: float = 0.0) -> np.ndarray:
    """e^{St} Σ_j r_j η_j(0) with rᵀ L = 0, Σ r_j = 1"""
    r = consensus_weights(graph)
    center = r @ np.asarray(eta0, dtype=float)
    return linalg.expm(gains.S * t) @ center


def step_continuous(bank: ObserverBank, gains: ObserverGains, v_m: np.ndarray, graph: WeightedDigraph, dt: float) -> ObserverBank:
    """One RK4 step of the continuous observer jointly with the leader"""
    N, q = bank.eta.shape
    M = np.block([
        [error_matrix(gains, graph), leader_input_matrix(gains, graph)],
        [np.zeros((q, N * q)), gains.S],
    ])
    s = np.concatenate([bank.eta.reshape(-1), v_m])
    s = rk4_transition(M, dt) @ s
    return ObserverBank(bank.variant, s[:N * q].reshape(N, q))


def step_discrete(bank: ObserverBank, gains: ObserverGains, v: np.ndarray, graph: WeightedDigraph) -> ObserverBank:
    N, q = bank.eta.shape
    eta = error_matrix(gains, graph) @ bank.eta.reshape(-1) + leader_input_matrix(gains, graph) @ v
    return ObserverBank(bank.variant, eta.reshape(N, q))


def step_sync_ref(bank: ObserverBank, gains: ObserverGains, graph: WeightedDigraph, dt: float) -> ObserverBank:
    N, q = bank.eta.shape
    eta = rk4_transition(error_matrix(gains, graph), dt) @ bank.eta.reshape(-1)
    return ObserverBank(bank.variant, eta.reshape(N, q))


def adaptive_field(gains: ObserverGains, graph: WeightedDigraph, S_leader: np.ndarray):
    """
    Vector field over [vec Ŝ_1..N, η_1..N, v] for the adaptive observer.
    Returned callable has the (t, x) signature of rk4_step.
    """
    H = h_matrix(graph).matrix
    a0 = graph.leader_weights
    N, q = H.shape[0], S_leader.shape[0]
    n_s = N * q * q

    def f(t: float, x: np.ndarray) -> np.ndarray:
        S_hat = x[:n_s].reshape(N, q, q)
        eta = x[n_s:n_s + N * q].reshape(N, q)
        v = x[n_s + N * q:]
        dS = gains.mu1 * (-np.einsum("ij,jab->iab", H, S_hat) + a0[:, None, None] * S_leader)
        deta = np.einsum("iab,ib->ia", S_hat, eta) + gains.mu2 * (-(H @ eta) + np.outer(a0, v))
        return np.concatenate([dS.reshape(-1), deta.reshape(-1), S_leader @ v])

    return f


def step_adaptive(
    bank: ObserverBank,
    gains: ObserverGains,
    S_leader: np.ndarray,
    v: np.ndarray,
    graph: WeightedDigraph,
    dt: float,
    t: float = 0.0,
) -> ObserverBank:
    N, q = bank.eta.shape
    f = adaptive_field(gains, graph, S_leader)
    x = np.concatenate([bank.S_hat.reshape(-1), bank.eta.reshape(-1), v])
    x = rk4_step(f, t, x, dt)
    n_s = N * q * q
    return ObserverBank(bank.variant, x[n_s:n_s + N * q].reshape(N, q), x[:n_s].reshape(N, q, q))


@dataclass
class BankHistory:
    times: List[float]
    eta: List[np.ndarray]
    v: List[np.ndarray]
    S_hat: List[np.ndarray] = field(default_factory=list)

    def errors(self) -> np.ndarray:
        """max_i ‖η_i - v‖ per sample"""
        return np.array([np.linalg.norm(e - v, axis=1).max() for e, v in zip(self.eta, self.v)])


def simulate_bank(
    bank: ObserverBank,
    gains: ObserverGains,
    sched: SwitchingSchedule,
    v0: np.ndarray,
    horizon: float,
    step: Optional[float] = None,
) -> BankHistory:
    """
    Step an observer bank alone along a schedule. For sync_ref the reference
    `v` is the predicted synchronization trajectory from v0. Discrete banks
    take unit steps and ignore `step`.
    """
    step = Config.STEP if step is None else step
    S = gains.S
    v = np.asarray(v0, dtype=float).copy()
    discrete = bank.variant == ObserverVariant.DISCRETE
    h = 1.0 if discrete else step
    history = BankHistory([0.0], [bank.eta.copy()], [v.copy()])
    if bank.S_hat is not None:
        history.S_hat.append(bank.S_hat.copy())
    Phi_v = S if discrete else rk4_transition(S, h)

    for start, end, p in sched.intervals(horizon):
        graph = sched.graphs[p]
        n_steps = max(1, int(round((end - start) / h)))
        dt = (end - start) / n_steps
        Phi_v_local = Phi_v if discrete or dt == h else rk4_transition(S, dt)
        for k in range(n_steps):
            t = start + k * dt
            if bank.variant == ObserverVariant.CONTINUOUS:
                bank = step_continuous(bank, gains, v, graph, dt)
            elif discrete:
                bank = step_discrete(bank, gains, v, graph)
            elif bank.variant == ObserverVariant.SYNC_REF:
                bank = step_sync_ref(bank, gains, graph, dt)
            else:
                bank = step_adaptive(bank, gains, S, v, graph, dt, t)
            v = Phi_v_local @ v
            history.times.append(start + (k + 1) * dt)
            history.eta.append(bank.eta.copy())
            history.v.append(v.copy())
            if bank.S_hat is not None:
                history.S_hat.append(bank.S_hat.copy())
    return history


def observer_report(gains: Optional[ObserverGains], sc: Scenario) -> Dict[str, Any]:
    """Per-graph error-matrix stability summary for reports"""
    if gains is None:
        return {"variant": None}
    rows = []
    for p, graph in enumerate(sc.topology.graphs):
        M = error_matrix(gains, graph)
        spec = spectrum(M)
        row = {"graph": p}
        if gains.variant == ObserverVariant.DISCRETE:
            row["spectral_radius"] = spec.max_modulus
        else:
            row["max_real"] = spec.max_real
            row["hurwitz"] = is_hurwitz(M)
        rows.append(row)
    return {
        "variant": gains.variant.value,
        "rule": gains.rule.value,
        "mu": gains.mu,
        "graphs": rows,
    }
