"""Data-driven policy iteration for the LQR gain (no plant matrices used).

Both learners iterate on the regression blocks of
:class:`~camlqr.data.DataMatrices`.  At iteration ``k`` with current policy
``K_k`` and ``Qbar_k = Q + K_k' R K_k`` the unknown stack is solved from

    Theta_k z = Phi_k,
    Theta_k = [N_xx, -2 M_xx (I (x) K_k' R) - 2 M_xu0 (I (x) R) (, -2 M_xpsi)]
    Phi_k   = -M_xx vec(Qbar_k)

where ``z`` holds ``vec(P_k)``, ``vec(K_{k+1})`` and (coupling-aware mode
only) ``vec(B'P_k)``.  ``P_k`` is reshaped and symmetrized; iteration stops
when ``||P_k - P_{k-1}||_F`` drops below the tolerance.

The full ``vec(P)`` parameterization is kept deliberately: it carries exact
duplicate columns for the symmetric off-diagonal products, so the solves use
the minimum-norm path with the structurally attainable rank declared, and
symmetrization resolves the remaining (null-space) ambiguity.  The regression
assumes the logged exploration input ``u0`` was the total actuation during
the data window (no feedback ran while exploring).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DataMatrices, required_rank
from .errors import IoFailure, MissingPsi, NoConvergence, NonPositiveP, RankDeficient
from .linalg import (
    RANK_CUTOFF_FACTOR,
    CostSpec,
    least_squares_min_norm,
    symmetrize,
    unvec,
    vec,
)

#: Relative size above which a null-space component on the value/gain blocks
#: marks those blocks as non-identifiable.
IDENTIFIABILITY_TOL = 1e-6


@dataclass
class GainResult:
    """Outcome of a data-driven policy iteration run.

    ``iterates`` holds ``(P_k, K_k, update_norm_k)`` with ``K_k`` the policy
    evaluated at step ``k`` (``update_norm_0`` is ``inf``).  ``BtP_final`` is
    populated only by the coupling-aware learner.
    """

    K_final: np.ndarray | None = None
    P_final: np.ndarray | None = None
    BtP_final: np.ndarray | None = None
    iterates: list = field(default_factory=list)
    converged: bool = False
    condition_numbers: list = field(default_factory=list)

    @property
    def n_iterations(self) -> int:
        return len(self.iterates)

    @property
    def final_update_norm(self) -> float:
        return self.iterates[-1][2] if self.iterates else np.inf


def _check_identifiability(Theta: np.ndarray, n: int, m: int) -> None:
    """Reject regressors whose null space touches the value/gain blocks.

    The unknown stack tolerates two kinds of null directions: antisymmetric
    components of ``vec(P)`` (structural duplicates) and directions confined
    to the trailing ``vec(B'P)`` block (absorbed by the minimum-norm choice).
    Anything else means the extracted ``P``/``K`` would not be unique.
    """
    _, s, Vt = np.linalg.svd(Theta, full_matrices=False)
    cutoff = s[0] * max(Theta.shape) * np.finfo(float).eps * RANK_CUTOFF_FACTOR
    null = Vt[s <= cutoff]
    nn, nm = n * n, n * m
    for v in null:
        p_sym = np.linalg.norm(symmetrize(unvec(v[:nn], n, n)))
        k_part = np.linalg.norm(v[nn:nn + nm])
        if p_sym > IDENTIFIABILITY_TOL or k_part > IDENTIFIABILITY_TOL:
            raise RankDeficient(
                "excitation data leave the value/gain blocks non-identifiable "
                f"(null-space leakage {max(p_sym, k_part):.3e}); the coupling "
                "signal is insufficiently independent of the state products"
            )


def _policy_iteration(D: DataMatrices, cost: CostSpec, K0, tol: float,
                      max_iter: int, with_psi: bool) -> GainResult:
    n, m = D.n, D.m
    if cost.n != n or cost.m != m:
        raise ValueError("cost dimensions do not match the data matrices")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    K = np.zeros((m, n)) if K0 is None else np.asarray(K0, dtype=float)
    if K.shape != (m, n):
        raise ValueError(f"K0 must be {m}x{n}, got {K.shape}")
    if with_psi and D.M_xpsi is None:
        raise MissingPsi(
            "coupling-aware learning requires data built with a psi block"
        )
    nn, nm = n * n, n * m
    I_n = np.eye(n)
    base_rank = required_rank(n, m, "nominal")
    result = GainResult()
    P_prev = None
    for _ in range(max_iter):
        Qbar = cost.Q + K.T @ cost.R @ K
        mid = -2.0 * (D.M_xx @ np.kron(I_n, K.T @ cost.R)
                      + D.M_xu0 @ np.kron(I_n, cost.R))
        blocks = [D.N_xx, mid]
        if with_psi:
            blocks.append(-2.0 * D.M_xpsi)
        Theta = np.hstack(blocks)
        Phi = -(D.M_xx @ vec(Qbar))
        if with_psi:
            _check_identifiability(Theta, n, m)
        z, cond = least_squares_min_norm(Theta, Phi, expected_rank=base_rank)
        result.condition_numbers.append(cond)
        P = symmetrize(unvec(z[:nn], n, n))
        eig_min = float(np.linalg.eigvalsh(P).min())
        if eig_min < -1e-8:
            raise NonPositiveP(
                f"extracted value matrix has eigenvalue {eig_min:.3e} < -1e-8; "
                "the evaluated policy is not admissible on this plant"
            )
        K_next = unvec(z[nn:nn + nm], m, n)
        S = unvec(z[nn + nm:nn + 2 * nm], m, n) if with_psi else None
        dP = np.inf if P_prev is None else float(np.linalg.norm(P - P_prev))
        result.iterates.append((P, K.copy(), dP))
        if dP < tol:
            result.converged = True
            result.P_final = P
            result.K_final = K_next
            result.BtP_final = S
            return result
        P_prev = P
        K = K_next
    raise NoConvergence(
        f"policy iteration did not meet tolerance {tol:g} within "
        f"{max_iter} iterations (last update {result.final_update_norm:.3e})",
        result=result,
    )


def nominal_rl(D: DataMatrices, cost: CostSpec, K0=None, tol: float = 1e-6,
               max_iter: int = 30) -> GainResult:
    """Policy iteration on uncoupled exploration data.

    Requires the nominal excitation rank (see
    :func:`camlqr.data.check_rank`); an insufficient regressor surfaces as
    :class:`~camlqr.errors.RankDeficient` from the solver.
    """
    return _policy_iteration(D, cost, K0, tol, max_iter, with_psi=False)


def arrl(D: DataMatrices, cost: CostSpec, K0=None, tol: float = 1e-6,
         max_iter: int = 30) -> GainResult:
    """Coupling-aware policy iteration that targets the true plant.

    The unknown stack is augmented with ``vec(B'P_k)`` against the
    ``M_xpsi`` block, so the returned gain is optimal for the underlying
    dynamics even though the data were produced with the state-dependent
    actuation coupling active.  Each iteration additionally verifies that the
    regressor's null space leaves the value/gain blocks uniquely determined.
    """
    return _policy_iteration(D, cost, K0, tol, max_iter, with_psi=True)


def run_iteration_report(result: GainResult, oracle_gain=None) -> str:
    """Deterministic key-value + table summary of a learning run.

    With ``oracle_gain`` supplied, per-iteration gaps
    ``||K_k - K_oracle||_F`` and the final relative gain error are included.
    """
    lines = [
        f"converged: {str(result.converged).lower()}",
        f"iterations: {result.n_iterations}",
        f"final_update_norm: {result.final_update_norm:.6e}",
    ]
    oracle = None
    if oracle_gain is not None:
        oracle = np.asarray(oracle_gain, dtype=float)
        if result.K_final is not None:
            rel = np.linalg.norm(result.K_final - oracle) / np.linalg.norm(oracle)
            lines.append(f"final_relative_gain_error: {rel:.6e}")
    lines.append("")
    header = "k,update_norm,condition_number"
    if oracle is not None:
        header += ",gain_gap"
    lines.append(header)
    for k, (P_k, K_k, dP) in enumerate(result.iterates):
        cond = result.condition_numbers[k] if k < len(result.condition_numbers) else np.nan
        row = f"{k},{dP:.6e},{cond:.6e}"
        if oracle is not None:
            row += f",{np.linalg.norm(K_k - oracle):.6e}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def write_gain_report(result: GainResult, directory, oracle_gain=None,
                      prefix: str = "gain") -> list:
    """Write the text report and the iterate CSV; returns the file paths."""
    import os

    os.makedirs(directory, exist_ok=True)
    text = run_iteration_report(result, oracle_gain=oracle_gain)
    report_path = os.path.join(directory, f"{prefix}_report.txt")
    csv_path = os.path.join(directory, f"{prefix}_iterates.csv")
    try:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(text[text.index("k,update_norm"):])
    except OSError as exc:
        raise IoFailure(f"cannot write gain report: {exc}") from exc
    return [report_path, csv_path]
