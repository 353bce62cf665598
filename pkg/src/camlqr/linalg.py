"""Small-dense linear algebra and the model-based ground-truth gain solver.

This module supplies the Kronecker/vectorization helpers used by the data
pipeline, a Lyapunov solver built on the vectorized (Kronecker-sum) linear
system, a minimum-norm least-squares front end, and the model-based policy
iteration (Lyapunov policy evaluation alternated with the gain update
``K <- R^-1 B' P``) that serves as the oracle against which data-driven gains
are judged.

All functions are pure: they allocate fresh arrays and never mutate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EigFailure,
    InsufficientData,
    NoConvergence,
    NotHurwitz,
    NotStabilizing,
    RankDeficient,
    SingularSystem,
)

#: Spectral abscissas at or above this value count as "not Hurwitz".
HURWITZ_TOL = -1e-12

#: Multiplier on sigma_max * max(dims) * machine-epsilon used as the
#: numerical-rank cutoff throughout the package.
RANK_CUTOFF_FACTOR = 1e3


def _as_float_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return a float ndarray copy of ``M``; reject non-finite entries."""
    A = np.array(M, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1) if A.size else A.reshape(0, 0)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if A.size and not np.isfinite(A).all():
        raise ValueError(f"{name} contains non-finite entries")
    return A


def vec(M) -> np.ndarray:
    """Column-stacking vectorization: vec(M)[(j)*rows + i] = M[i, j]."""
    return np.asarray(M, dtype=float).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape length-{v.size} vector to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(A, B) -> np.ndarray:
    """Kronecker product; for 1-D inputs returns the stacked outer product."""
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def symmetrize(M) -> np.ndarray:
    """Return the symmetric part (M + M') / 2."""
    M = np.asarray(M, dtype=float)
    return (M + M.T) / 2.0


def spectral_abscissa(A) -> float:
    """Largest real part over the eigenvalues of ``A``."""
    A = _as_float_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError("spectral_abscissa requires a square matrix")
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare in practice
        raise EigFailure(f"eigenvalue computation failed: {exc}") from exc
    return float(eigs.real.max())


def numerical_rank(M, return_singular_values: bool = False):
    """Numerical rank at cutoff ``sigma_max * max(dims) * eps * 1e3``.

    Returns the rank, or ``(rank, singular_values)`` when requested.  The
    deliberately loose cutoff keeps rank verdicts stable for data sitting near
    an excitation boundary.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return (0, np.zeros(0)) if return_singular_values else 0
    s = np.linalg.svd(M, compute_uv=False)
    cutoff = s[0] * max(M.shape) * np.finfo(float).eps * RANK_CUTOFF_FACTOR
    rank = int((s > cutoff).sum())
    if return_singular_values:
        return rank, s
    return rank


def solve_lyapunov(A_cl, W) -> np.ndarray:
    """Solve ``A_cl' P + P A_cl + W = 0`` for symmetric ``P``.

    Uses the vectorized Kronecker-sum linear system
    ``(I (x) A_cl' + A_cl' (x) I) vec(P) = -vec(W)``, appropriate at desk
    scale.  The result is explicitly symmetrized and its residual is verified
    against ``1e-9 * ||W||_F``.
    """
    A_cl = _as_float_matrix(A_cl, "A_cl")
    W = _as_float_matrix(W, "W")
    n = A_cl.shape[0]
    if A_cl.shape != (n, n) or W.shape != (n, n):
        raise ValueError("A_cl and W must be square matrices of the same size")
    alpha = spectral_abscissa(A_cl)
    if alpha >= HURWITZ_TOL:
        raise NotHurwitz(
            f"closed-loop matrix has spectral abscissa {alpha:.3e} >= {HURWITZ_TOL}"
        )
    I = np.eye(n)
    lhs = np.kron(I, A_cl.T) + np.kron(A_cl.T, I)
    try:
        p = np.linalg.solve(lhs, -vec(W))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"vectorized Lyapunov system is singular: {exc}") from exc
    P = symmetrize(unvec(p, n, n))
    res = np.linalg.norm(A_cl.T @ P + P @ A_cl + W)
    bound = 1e-9 * max(np.linalg.norm(W), np.finfo(float).tiny)
    if res > bound:
        raise SingularSystem(
            f"Lyapunov residual {res:.3e} exceeds bound {bound:.3e}; "
            "the vectorized system is numerically rank-deficient"
        )
    return P


def least_squares_min_norm(Theta, Phi, expected_rank: int | None = None):
    """Minimum-norm least-squares solve of ``Theta z = Phi``.

    Returns ``(z, condition_number)`` where the condition number is the ratio
    of the largest singular value to the smallest singular value retained by
    the numerical-rank cutoff (the conditioning of the problem actually
    solved).

    ``expected_rank`` declares how many independent directions the caller
    requires; it defaults to full column rank.  Regressions whose unknown
    vector carries structural redundancy (duplicate columns resolved by the
    minimum-norm choice) pass the smaller count they genuinely need.
    """
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float))
    Phi = np.asarray(Phi, dtype=float).reshape(-1)
    p, q = Theta.shape
    if Phi.size != p:
        raise ValueError(f"Phi has length {Phi.size}, expected {p}")
    if p < q:
        raise InsufficientData(
            f"least-squares needs at least as many rows ({p}) as unknowns ({q})"
        )
    need = q if expected_rank is None else int(expected_rank)
    U, s, Vt = np.linalg.svd(Theta, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise RankDeficient("regressor is identically zero")
    cutoff = s[0] * max(p, q) * np.finfo(float).eps * RANK_CUTOFF_FACTOR
    rank = int((s > cutoff).sum())
    if rank < need:
        raise RankDeficient(
            f"numerical rank {rank} below required {need} "
            f"(cutoff {cutoff:.3e}); excitation condition not met"
        )
    s_inv = np.zeros_like(s)
    s_inv[:rank] = 1.0 / s[:rank]
    z = Vt.T @ (s_inv * (U.T @ Phi))
    cond = float(s[0] / s[rank - 1])
    return z, cond


def stabilizing_gain(A, B) -> np.ndarray:
    """Construct a gain ``K`` with ``A - B K`` Hurwitz (Bass's method).

    Solves ``M P + P M' + 2 B B' = 0`` with ``M = -(A + beta I)`` and
    ``beta = 1 + ||A||_F`` (so ``M`` is Hurwitz by construction), then returns
    ``K = B' P^-1``: substituting back gives
    ``(A - B K) P + P (A - B K)' = -2 beta P``, a Lyapunov certificate.
    Requires controllability for ``P`` to be invertible.
    """
    A = _as_float_matrix(A, "A")
    B = _as_float_matrix(B, "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise ValueError("A and B have inconsistent row counts")
    beta = 1.0 + np.linalg.norm(A)
    M = -(A + beta * np.eye(n))
    P = solve_lyapunov(M.T, 2.0 * B @ B.T)
    eigs = np.linalg.eigvalsh(P)
    if eigs.min() <= 1e-12 * max(eigs.max(), 1.0):
        raise NotStabilizing(
            "stabilizing-gain construction failed: the pair (A, B) is not "
            "controllable enough for the Gramian-style certificate"
        )
    K = np.linalg.solve(P.T, B).T
    abscissa = spectral_abscissa(A - B @ K)
    if abscissa >= HURWITZ_TOL:
        raise NotStabilizing(
            f"constructed gain leaves spectral abscissa {abscissa:.3e}"
        )
    return K


@dataclass(frozen=True)
class CostSpec:
    """Quadratic cost weights: symmetric PSD ``Q`` and symmetric PD ``R``.

    Definiteness is checked at construction by eigenvalue sign with a 1e-10
    tolerance relative to the largest eigenvalue magnitude.
    """

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = _as_float_matrix(self.Q, "Q")
        R = _as_float_matrix(self.R, "R")
        for name, M in (("Q", Q), ("R", R)):
            if M.shape[0] != M.shape[1]:
                raise ValueError(f"{name} must be square, got {M.shape}")
            scale = max(np.abs(M).max(), 1.0)
            if np.abs(M - M.T).max() > 1e-10 * scale:
                raise ValueError(f"{name} must be symmetric")
        q_eigs = np.linalg.eigvalsh(symmetrize(Q))
        q_scale = max(np.abs(q_eigs).max(), 1.0) if q_eigs.size else 1.0
        if q_eigs.size and q_eigs.min() < -1e-10 * q_scale:
            raise ValueError("Q must be positive semidefinite")
        r_eigs = np.linalg.eigvalsh(symmetrize(R))
        r_scale = max(np.abs(r_eigs).max(), 1.0) if r_eigs.size else 1.0
        if r_eigs.size == 0 or r_eigs.min() <= 1e-10 * r_scale:
            raise ValueError("R must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]


@dataclass
class KleinmanTrace:
    """History of the model-based policy iteration.

    ``iterates`` holds ``(P_k, K_k)`` pairs where ``K_k`` is the policy whose
    evaluation produced ``P_k``; ``K_final`` is the post-convergence update
    ``R^-1 B' P_final``.
    """

    iterates: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = np.inf
    P_final: np.ndarray | None = None
    K_final: np.ndarray | None = None


def care_residual(A, B, cost: CostSpec, P) -> float:
    """Frobenius norm of ``A'P + PA - P B R^-1 B' P + Q``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    P = np.asarray(P, dtype=float)
    term = A.T @ P + P @ A - P @ B @ np.linalg.solve(cost.R, B.T @ P) + cost.Q
    return float(np.linalg.norm(term))


def kleinman_solve(model, cost: CostSpec, K0=None, tol: float = 1e-9,
                   max_iter: int = 100) -> KleinmanTrace:
    """Model-based policy iteration for the continuous-time LQR gain.

    Alternates the Lyapunov policy evaluation
    ``(A - B K_k)' P_k + P_k (A - B K_k) + Q + K_k' R K_k = 0`` with the
    update ``K_{k+1} = R^-1 B' P_k`` until ``||P_k - P_{k-1}||_F < tol``.
    The converged ``P`` is verified against the Riccati residual bound 1e-6.

    ``model`` is anything exposing ``A`` and ``B`` arrays (e.g.
    :class:`camlqr.plant.LTIModel`).
    """
    A = _as_float_matrix(model.A, "A")
    B = _as_float_matrix(model.B, "B")
    n, m = B.shape
    if tol <= 0:
        raise ValueError("tol must be positive")
    K = np.zeros((m, n)) if K0 is None else _as_float_matrix(K0, "K0")
    if K.shape != (m, n):
        raise ValueError(f"K0 must be {m}x{n}, got {K.shape}")
    abscissa = spectral_abscissa(A - B @ K)
    if abscissa >= HURWITZ_TOL:
        raise NotStabilizing(
            f"initial gain leaves spectral abscissa {abscissa:.3e}; "
            "a stabilizing start is required (see stabilizing_gain)"
        )
    trace = KleinmanTrace()
    P_prev = None
    for _ in range(max_iter):
        A_cl = A - B @ K
        W = cost.Q + K.T @ cost.R @ K
        P = solve_lyapunov(A_cl, W)
        trace.iterates.append((P, K.copy()))
        K = np.linalg.solve(cost.R, B.T @ P)
        if P_prev is not None and np.linalg.norm(P - P_prev) < tol:
            trace.converged = True
            trace.P_final = P
            trace.K_final = K
            trace.final_residual = care_residual(A, B, cost, P)
            if trace.final_residual > 1e-6:
                raise NoConvergence(
                    f"iteration met its step tolerance but the Riccati "
                    f"residual {trace.final_residual:.3e} exceeds 1e-6"
                )
            return trace
        P_prev = P
    raise NoConvergence(
        f"policy iteration did not converge within {max_iter} iterations"
    )
