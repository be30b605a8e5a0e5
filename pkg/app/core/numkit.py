"""
Dense real-matrix numerics: spectra, stability and PBH tests, Riccati,
Lyapunov and vectorized linear matrix equation solvers.

All routines are pure functions of their inputs.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from app.core.errors import (
    DimensionError,
    MarginalStabilityError,
    NoSolutionError,
    NumericError,
    PreconditionError,
    SynthesisError,
)

logger = logging.getLogger(__name__)

# Relative singular-value threshold for every rank decision
RANK_RTOL = 1e-10
# Absolute tolerance for real-part / modulus comparisons on spectra
SPECTRUM_ATOL = 1e-9
# Exact-solve threshold: residual < EXACT_RTOL * (1 + ||rhs||)
EXACT_RTOL = 1e-9
# Eigenvalues closer than this (scaled by ||M||) are reported as one cluster
CLUSTER_RTOL = 1e-6
# Riccati residual threshold: ||res|| < ARE_RTOL * (1 + ||P||)
ARE_RTOL = 1e-8


def as_matrix(data, name: str = "matrix", shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """
    Convert nested sequences to a finite 2-D float array.

    Args:
        data: Array-like in row-major order
        name: Label used in error messages
        shape: Expected shape; empty input is reshaped to it

    Raises:
        DimensionError: ragged rows, wrong rank or wrong shape
        NumericError: non-finite entries
    """
    try:
        M = np.array(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise DimensionError(f"{name} is not a rectangular real matrix: {e}") from e

    if M.size == 0:
        if shape is not None:
            return np.zeros(shape)
        if M.ndim == 2:
            return M
        return np.zeros((0, 0))

    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got {M.ndim}-D")
    if shape is not None and M.shape != tuple(shape):
        raise DimensionError(f"{name} must be {shape[0]}x{shape[1]}, got {M.shape[0]}x{M.shape[1]}")
    if not np.all(np.isfinite(M)):
        raise NumericError(f"{name} has non-finite entries")
    return M


def _square(M, name: str = "matrix") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape[0]}x{M.shape[1]}")
    return M


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class Eigenvalue:
    """One distinct eigenvalue with its multiplicities"""
    value: complex
    algebraic: int
    geometric: int

    @property
    def semisimple(self) -> bool:
        return self.algebraic == self.geometric


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by (real, imag); `values` keeps the raw multiset"""
    eigenvalues: Tuple[Eigenvalue, ...]
    values: Tuple[complex, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.eigenvalues)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=complex)

    @property
    def max_real(self) -> float:
        if not self.values:
            return -np.inf
        return max(v.real for v in self.values)

    @property
    def min_real(self) -> float:
        if not self.values:
            return np.inf
        return min(v.real for v in self.values)

    @property
    def max_modulus(self) -> float:
        if not self.values:
            return 0.0
        return max(abs(v) for v in self.values)


def _sort_key(z: complex) -> Tuple[float, float]:
    return (float(np.real(z)), float(np.imag(z)))


def spectrum(M) -> Spectrum:
    """
    Eigenvalues of a square matrix with algebraic and geometric multiplicities.

    Raises:
        DimensionError: non-square input
        NumericError: eigenvalue iteration failure
    """
    M = _square(M, "spectrum input")
    n = M.shape[0]
    if n == 0:
        return Spectrum((), ())

    try:
        raw = linalg.eigvals(M)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"eigenvalue iteration did not converge: {e}") from e
    if not np.all(np.isfinite(raw)):
        raise NumericError("eigenvalue iteration produced non-finite values")

    raw = sorted((complex(z) for z in raw), key=_sort_key)
    scale = 1.0 + float(np.abs(M).max())
    tol = max(SPECTRUM_ATOL, CLUSTER_RTOL * scale)

    clusters: List[List[complex]] = []
    for z in raw:
        for cluster in clusters:
            if abs(z - cluster[0]) <= tol:
                cluster.append(z)
                break
        else:
            clusters.append([z])

    eigenvalues = []
    for cluster in clusters:
        center = complex(np.mean(cluster))
        if abs(center.imag) <= SPECTRUM_ATOL:
            center = complex(center.real, 0.0)
        algebraic = len(cluster)
        sv = linalg.svdvals(M - center * np.eye(n))
        geo_tol = max(RANK_RTOL * sv[0], tol)
        geometric = int(np.clip(np.sum(sv <= geo_tol), 1, algebraic))
        eigenvalues.append(Eigenvalue(center, algebraic, geometric))

    eigenvalues.sort(key=lambda e: _sort_key(e.value))
    return Spectrum(tuple(eigenvalues), tuple(raw))


def is_hurwitz(M, margin: float = 0.0) -> bool:
    """True iff every eigenvalue has real part below -margin"""
    if margin < 0:
        raise ValueError(f"margin must be nonnegative, got {margin}")
    return spectrum(M).max_real < -margin - SPECTRUM_ATOL


def spectral_radius(M) -> float:
    return spectrum(M).max_modulus


def is_schur(M) -> bool:
    """True iff every eigenvalue lies strictly inside the unit circle"""
    return spectral_radius(M) < 1.0 - SPECTRUM_ATOL


def numeric_rank(M) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    sv = linalg.svdvals(M)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def _pbh(A, B, select) -> bool:
    A = _square(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B must have {n} rows, got {B.shape[0]}")
    for ev in spectrum(A):
        if not select(ev.value):
            continue
        pencil = np.hstack([A - ev.value * np.eye(n), B])
        if numeric_rank(pencil) < n:
            logger.debug("PBH rank deficient at eigenvalue %s", ev.value)
            return False
    return True


def pbh_stabilizable(A, B, discrete: bool = False) -> bool:
    """PBH test: rank[A - λI, B] = n at every non-stable eigenvalue of A"""
    if discrete:
        return _pbh(A, B, lambda lam: abs(lam) >= 1.0 - SPECTRUM_ATOL)
    return _pbh(A, B, lambda lam: lam.real >= -SPECTRUM_ATOL)


def pbh_detectable(C, A, discrete: bool = False) -> bool:
    A = _square(A, "A")
    C = as_matrix(C, "C")
    if C.shape[1] != A.shape[0]:
        raise DimensionError(f"C must have {A.shape[0]} columns, got {C.shape[1]}")
    return pbh_stabilizable(A.T, C.T, discrete=discrete)


def pbh_controllable(A, B) -> bool:
    return _pbh(A, B, lambda lam: True)


def pbh_observable(C, A) -> bool:
    A = _square(A, "A")
    C = as_matrix(C, "C")
    if C.shape[1] != A.shape[0]:
        raise DimensionError(f"C must have {A.shape[0]} columns, got {C.shape[1]}")
    return pbh_controllable(A.T, C.T)


def kron(A, B) -> np.ndarray:
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def _on_imaginary_axis(x, y=None) -> bool:
    # gees passes (real, imag) for real input and a complex value otherwise
    re = x if y is not None else np.real(x)
    return bool(abs(re) <= SPECTRUM_ATOL)


def solve_lyap_marginal(S) -> np.ndarray:
    """
    Positive definite P with P Sᵀ + S P negative semidefinite.

    Sᵀ is block-diagonalized into its imaginary-axis part (handled through
    its eigenbasis, giving a zero residual there) and its Hurwitz part
    (a strict Lyapunov solve). The result is scaled to unit spectral norm.

    Raises:
        MarginalStabilityError: eigenvalue with positive real part, or a
            non-semisimple eigenvalue on the imaginary axis
    """
    S = _square(S, "S")
    q = S.shape[0]
    if q == 0:
        return np.zeros((0, 0))

    spec = spectrum(S)
    for ev in spec:
        if ev.value.real > SPECTRUM_ATOL:
            raise MarginalStabilityError(f"S has eigenvalue {ev.value:.6g} with positive real part")
        if abs(ev.value.real) <= SPECTRUM_ATOL and not ev.semisimple:
            raise MarginalStabilityError(
                f"imaginary-axis eigenvalue {ev.value:.6g} is not semi-simple "
                f"(algebraic {ev.algebraic}, geometric {ev.geometric})"
            )

    if np.linalg.eigvalsh(symmetrize(S + S.T)).max() <= SPECTRUM_ATOL:
        return np.eye(q)

    A = S.T
    try:
        T, Z, k = linalg.schur(A, output="real", sort=_on_imaginary_axis)
    except linalg.LinAlgError as e:
        raise NumericError(f"Schur decomposition failed: {e}") from e

    expected = sum(1 for z in spec.values if abs(z.real) <= SPECTRUM_ATOL)
    if k != expected:
        raise NumericError(f"Schur reordering selected {k} axis modes, expected {expected}")

    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    Y = linalg.solve_sylvester(T11, -T22, -T12) if 0 < k < q else np.zeros((k, q - k))

    W_inv = np.eye(q)
    W_inv[:k, k:] = -Y
    M_inv = W_inv @ Z.T

    P_block = np.zeros((q, q))
    if k:
        _, V = linalg.eig(T11)
        Q = linalg.inv(V)
        P_block[:k, :k] = symmetrize(np.real(Q.conj().T @ Q))
    if k < q:
        P_block[k:, k:] = symmetrize(linalg.solve_continuous_lyapunov(T22.T, -np.eye(q - k)))

    P = symmetrize(M_inv.T @ P_block @ M_inv)
    P = P / np.linalg.eigvalsh(P).max()

    if np.linalg.eigvalsh(P).min() <= 0:
        raise NumericError("marginal Lyapunov solution is not positive definite")
    worst = np.linalg.eigvalsh(symmetrize(P @ S.T + S @ P)).max()
    if worst > ARE_RTOL:
        raise NumericError(f"marginal Lyapunov residual {worst:.3e} is not negative semidefinite")
    return P


def _are_residual(A, G, P) -> float:
    n = A.shape[0]
    return float(np.linalg.norm(A.T @ P + P @ A - P @ G @ P + np.eye(n), 2))


def _newton_kleinman(A, B, P0, max_iter: int = 50) -> np.ndarray:
    n = A.shape[0]
    P = P0
    for iteration in range(max_iter):
        K = B.T @ P
        Ak = A - B @ K
        if not is_hurwitz(Ak):
            raise NumericError("Newton-Kleinman iterate lost stabilization")
        P_next = symmetrize(linalg.solve_continuous_lyapunov(Ak.T, -(np.eye(n) + K.T @ K)))
        step = np.linalg.norm(P_next - P, 2)
        P = P_next
        if step <= 1e-14 * (1.0 + np.linalg.norm(P, 2)):
            logger.debug("Newton-Kleinman converged after %d iterations", iteration + 1)
            break
    return P


def solve_are(A, B) -> np.ndarray:
    """
    Stabilizing solution of AᵀP + PA - PBBᵀP + I = 0.

    The stable invariant subspace of the Hamiltonian is taken from an
    ordered real Schur form; Newton-Kleinman refines when the residual is
    above tolerance.

    Raises:
        SynthesisError: (A, B) not stabilizable
        NumericError: no valid stabilizing solution was found
    """
    A = _square(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B must have {n} rows, got {B.shape[0]}")
    if n == 0:
        return np.zeros((0, 0))
    if not pbh_stabilizable(A, B):
        raise SynthesisError("pair (A, B) is not stabilizable", check="stabilizable")

    G = B @ B.T
    H = np.block([[A, -G], [-np.eye(n), -A.T]])
    P = None
    try:
        _, Z, sdim = linalg.schur(H, output="real", sort="lhp")
        if sdim == n:
            U11, U21 = Z[:n, :n], Z[n:, :n]
            if np.linalg.cond(U11) < 1e12:
                P = symmetrize(linalg.solve(U11.T, U21.T).T)
        else:
            logger.debug("Hamiltonian has %d stable eigenvalues, expected %d", sdim, n)
    except linalg.LinAlgError as e:
        logger.debug("Hamiltonian Schur path failed: %s", e)

    tol = ARE_RTOL * (1.0 + (np.linalg.norm(P, 2) if P is not None else 0.0))
    if P is None or _are_residual(A, G, P) >= tol or not is_hurwitz(A - G @ P):
        if P is None or not is_hurwitz(A - G @ P):
            try:
                P = linalg.solve_continuous_are(A, B, np.eye(n), np.eye(B.shape[1]))
            except (linalg.LinAlgError, ValueError) as e:
                raise NumericError(f"Riccati solver failed: {e}") from e
        P = _newton_kleinman(A, B, symmetrize(P))

    residual = _are_residual(A, G, P)
    if residual >= ARE_RTOL * (1.0 + np.linalg.norm(P, 2)):
        raise NumericError(f"Riccati residual {residual:.3e} above tolerance")
    if not is_hurwitz(A - G @ P):
        raise NumericError("Riccati solution is not stabilizing")
    return P


def solve_dare(A, B) -> np.ndarray:
    """Stabilizing solution of the discrete Riccati equation with Q = I, R = I"""
    A = _square(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B must have {n} rows, got {B.shape[0]}")
    if n == 0:
        return np.zeros((0, 0))
    if not pbh_stabilizable(A, B, discrete=True):
        raise SynthesisError("pair (A, B) is not stabilizable in discrete time", check="stabilizable")
    try:
        return symmetrize(linalg.solve_discrete_are(A, B, np.eye(n), np.eye(B.shape[1])))
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"discrete Riccati solver failed: {e}") from e


@dataclass(frozen=True)
class MatrixTerm:
    """The product left · X[unknown] · right"""
    left: np.ndarray
    unknown: int
    right: np.ndarray


@dataclass(frozen=True)
class MatrixEquation:
    """Sum of terms equal to rhs"""
    terms: Tuple[MatrixTerm, ...]
    rhs: np.ndarray


@dataclass(frozen=True)
class LinearSolveResult:
    solutions: Tuple[np.ndarray, ...]
    residual: float
    rhs_norm: float
    exact: bool


def solve_linear_matrix_system(
    equations: Sequence[MatrixEquation],
    unknown_shapes: Sequence[Tuple[int, int]],
    strict: bool = True,
) -> LinearSolveResult:
    """
    Least-squares solve of a system of linear matrix equations by
    Kronecker vectorization, vec(L X R) = (Rᵀ ⊗ L) vec(X).

    Raises:
        DimensionError: non-conformable terms
        NoSolutionError: residual above tolerance while `strict` is set
    """
    offsets = [0]
    for rows, cols in unknown_shapes:
        offsets.append(offsets[-1] + rows * cols)
    n_unknowns = offsets[-1]

    row_blocks = []
    rhs_blocks = []
    for index, equation in enumerate(equations):
        rhs = np.asarray(equation.rhs, dtype=float)
        r, c = rhs.shape
        block = np.zeros((r * c, n_unknowns))
        for term in equation.terms:
            a, b = unknown_shapes[term.unknown]
            L = np.asarray(term.left, dtype=float)
            R = np.asarray(term.right, dtype=float)
            if L.shape != (r, a) or R.shape != (b, c):
                raise DimensionError(
                    f"equation {index}: term on unknown {term.unknown} has shapes "
                    f"{L.shape} and {R.shape}, expected {(r, a)} and {(b, c)}"
                )
            block[:, offsets[term.unknown]:offsets[term.unknown + 1]] += np.kron(R.T, L)
        row_blocks.append(block)
        rhs_blocks.append(rhs.flatten(order="F"))

    coefficient = np.vstack(row_blocks) if row_blocks else np.zeros((0, n_unknowns))
    b = np.concatenate(rhs_blocks) if rhs_blocks else np.zeros(0)

    if n_unknowns and b.size:
        x, *_ = np.linalg.lstsq(coefficient, b, rcond=None)
    else:
        x = np.zeros(n_unknowns)

    residual = float(np.linalg.norm(coefficient @ x - b)) if b.size else 0.0
    rhs_norm = float(np.linalg.norm(b))
    exact = residual < EXACT_RTOL * (1.0 + rhs_norm)

    solutions = tuple(
        x[offsets[k]:offsets[k + 1]].reshape(shape, order="F")
        for k, shape in enumerate(unknown_shapes)
    )
    result = LinearSolveResult(solutions, residual, rhs_norm, exact)
    if strict and not exact:
        raise NoSolutionError(f"linear matrix system is inconsistent (residual {residual:.3e})",
                              residual=residual, solution=result)
    return result


@dataclass(frozen=True)
class SpectrumMatch:
    matched: bool
    max_error: float
    unmatched_actual: Tuple[complex, ...]
    unmatched_expected: Tuple[complex, ...]


def match_spectra(actual: Iterable[complex], expected: Iterable[complex], tol: float) -> SpectrumMatch:
    """Optimal one-to-one pairing of two eigenvalue multisets"""
    a = np.array(list(actual), dtype=complex)
    e = np.array(list(expected), dtype=complex)
    if a.size == 0 or e.size == 0:
        return SpectrumMatch(a.size == e.size, 0.0, tuple(a), tuple(e))

    cost = np.abs(a[:, None] - e[None, :])
    rows, cols = linear_sum_assignment(cost)
    bad_a = set(range(a.size)) - set(rows)
    bad_e = set(range(e.size)) - set(cols)
    max_error = 0.0
    for i, j in zip(rows, cols):
        err = cost[i, j]
        max_error = max(max_error, err)
        if err > tol * max(1.0, abs(e[j])):
            bad_a.add(i)
            bad_e.add(j)
    return SpectrumMatch(
        matched=not bad_a and not bad_e,
        max_error=float(max_error),
        unmatched_actual=tuple(a[i] for i in sorted(bad_a)),
        unmatched_expected=tuple(e[j] for j in sorted(bad_e)),
    )


def real_jordan_form(A) -> Tuple[np.ndarray, np.ndarray]:
    """
    Real block-diagonal form of a diagonalizable matrix.

    Returns (A_bar, P) with A = P⁻¹ A_bar P. Complex pairs a ± ib appear as
    [[a, b], [-b, a]] blocks; eigenvector pairs are phase-aligned so that
    orthogonal A gives an orthogonal transform.

    Raises:
        PreconditionError: A is not diagonalizable
    """
    A = _square(A, "A")
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))

    w, V = linalg.eig(A)
    order = sorted(range(n), key=lambda k: _sort_key(w[k]))
    columns = []
    for k in order:
        lam = w[k]
        if abs(lam.imag) <= SPECTRUM_ATOL:
            vec = np.real(V[:, k])
            columns.append(vec / np.linalg.norm(vec))
        elif lam.imag > 0:
            z = V[:, k]
            u, v = z.real, z.imag
            theta = 0.5 * np.arctan2(-2.0 * (u @ v), (u @ u) - (v @ v))
            z = z * np.exp(1j * theta)
            z = z * (np.sqrt(2.0) / np.linalg.norm(z))
            columns.extend([z.real, z.imag])

    if len(columns) != n:
        raise PreconditionError("eigenvalues of A do not pair into a real basis")
    W = np.column_stack(columns)
    if np.linalg.cond(W) > 1e10:
        raise PreconditionError("A is not diagonalizable; no real Jordan basis of eigenvectors")
    P = linalg.inv(W)
    return P @ A @ W, P
