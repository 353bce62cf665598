"""Regression-block assembly and excitation rank verification.

Converts a :class:`~camlqr.plant.TrajectoryLog` into the stacked blocks used
by the data-driven policy iteration:

* ``N_xx`` -- per-window endpoint differences of ``x (x) x``,
* ``M_xx`` -- per-window integrals of ``x (x) x``,
* ``M_xu0`` -- per-window integrals of ``x (x) u0``,
* ``M_xpsi`` -- per-window integrals of ``x (x) psi`` (coupling-aware mode).

When the log carries integrator-computed running integrals the window
integrals are formed from them (exact to integrator accuracy); otherwise a
trapezoidal rule over the logged samples is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, IoFailure, MissingPsi
from .linalg import numerical_rank

_trapezoid = getattr(np, "trapezoid", None) or np.trapz
from .plant import TrajectoryLog


@dataclass(frozen=True)
class DataMatrices:
    """Stacked regression blocks built from ``l`` disjoint windows of width
    ``T`` taken back-to-back from the start of the log."""

    N_xx: np.ndarray
    M_xx: np.ndarray
    M_xu0: np.ndarray
    M_xpsi: np.ndarray | None
    T: float
    l: int
    n: int
    m: int

    def __post_init__(self):
        nn, nm = self.n * self.n, self.n * self.m
        if self.N_xx.shape != (self.l, nn) or self.M_xx.shape != (self.l, nn):
            raise ValueError("state-product blocks have inconsistent shapes")
        if self.M_xu0.shape != (self.l, nm):
            raise ValueError("input-product block has inconsistent shape")
        if self.M_xpsi is not None and self.M_xpsi.shape != (self.l, nm):
            raise ValueError("coupling-product block has inconsistent shape")
        if not (self.T > 0.0) or self.l < 1:
            raise ValueError("T must be positive and l >= 1")

    def to_csv(self, path) -> None:
        """Write all blocks to a single CSV bundle for offline inspection.

        Each row is ``block,row_index,v1,...`` (row width varies per block);
        a leading ``meta`` row records ``T``, ``l``, ``n`` and ``m``.
        """
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("block,row_index,values\n")
                fh.write(f"meta,0,{self.T!r},{self.l},{self.n},{self.m}\n")
                blocks = [("N_xx", self.N_xx), ("M_xx", self.M_xx),
                          ("M_xu0", self.M_xu0)]
                if self.M_xpsi is not None:
                    blocks.append(("M_xpsi", self.M_xpsi))
                for name, block in blocks:
                    for i, row in enumerate(block):
                        vals = ",".join(f"{v:.11e}" for v in row)
                        fh.write(f"{name},{i},{vals}\n")
        except OSError as exc:
            raise IoFailure(f"cannot write data-matrix CSV {path}: {exc}") from exc


@dataclass(frozen=True)
class RankReport:
    """Verdict of the excitation rank condition for one learner mode."""

    mode: str
    required: int
    achieved: int
    satisfied: bool
    smallest_singular_value: float

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "required": self.required,
            "achieved": self.achieved,
            "satisfied": self.satisfied,
            "smallest_singular_value": self.smallest_singular_value,
        }


def _window_integrals(log: TrajectoryLog, starts: np.ndarray, width: int,
                      cumulative: np.ndarray | None,
                      left, right) -> np.ndarray:
    """Per-window integrals of ``kron(left_k, right_k)`` sample series.

    Prefers the integrator-carried cumulative channel; falls back to the
    trapezoidal rule over the logged samples.
    """
    l = starts.size
    if cumulative is not None:
        return cumulative[starts + width] - cumulative[starts]
    rows = np.einsum("ki,kj->kij", left, right).reshape(left.shape[0], -1)
    out = np.empty((l, rows.shape[1]))
    for i, s in enumerate(starts):
        out[i] = _trapezoid(rows[s:s + width + 1], dx=log.dt, axis=0)
    return out


def build_data_matrices(log: TrajectoryLog, T: float, l: int | None = None,
                        with_psi: bool = False) -> DataMatrices:
    """Assemble the regression blocks from ``l`` windows of width ``T``.

    ``T`` must be an integer multiple of the log step; windows are taken
    back-to-back from the first sample.  ``l`` defaults to every complete
    window the log supports.  ``with_psi`` additionally populates the
    coupling block from the logged ``psi`` channel (raising
    :class:`~camlqr.errors.MissingPsi` when the log has none).
    """
    if not (T > 0.0):
        raise ValueError("window width T must be positive")
    ratio = T / log.dt
    width = int(round(ratio))
    if width < 1 or abs(ratio - width) > 1e-6 * max(1.0, ratio):
        raise ValueError(
            f"window width T = {T} is not an integer multiple of dt = {log.dt}"
        )
    max_windows = (log.n_samples - 1) // width
    if l is None:
        l = max_windows
    if l < 1:
        raise InsufficientData("log too short for even one window")
    if l > max_windows:
        raise InsufficientData(
            f"log supports only {max_windows} windows of width {T}, "
            f"requested {l}"
        )
    if with_psi and log.psi is None:
        raise MissingPsi("log has no coupling channel but with_psi was requested")

    n, m = log.n, log.m
    starts = width * np.arange(l)
    ends = starts + width
    xk = log.x
    kron_xx = np.einsum("ki,kj->kij", xk, xk).reshape(log.n_samples, -1)
    N_xx = kron_xx[ends] - kron_xx[starts]
    M_xx = _window_integrals(log, starts, width, log.ixx, xk, xk)
    M_xu0 = _window_integrals(log, starts, width, log.ixu0, xk, log.u0)
    M_xpsi = None
    if with_psi:
        M_xpsi = _window_integrals(log, starts, width, log.ixpsi, xk, log.psi)
    return DataMatrices(N_xx=N_xx, M_xx=M_xx, M_xu0=M_xu0, M_xpsi=M_xpsi,
                        T=width * log.dt, l=int(l), n=n, m=m)


def excitation_stack(D: DataMatrices, mode: str) -> np.ndarray:
    """The stacked integral blocks whose rank gates the given learner mode."""
    if mode == "nominal":
        return np.hstack([D.M_xx, D.M_xu0])
    if mode == "arrl":
        psi_block = D.M_xpsi
        if psi_block is None:
            psi_block = np.zeros((D.l, D.n * D.m))
        return np.hstack([D.M_xx, D.M_xu0, psi_block])
    raise ValueError(f"unknown mode {mode!r} (expected 'nominal' or 'arrl')")


def required_rank(n: int, m: int, mode: str) -> int:
    """Excitation count demanded of the stacked blocks for each mode."""
    if mode == "nominal":
        return n * (n + 1) // 2 + n * m
    if mode == "arrl":
        return n * (n + 1) // 2 + 2 * n * m
    raise ValueError(f"unknown mode {mode!r} (expected 'nominal' or 'arrl')")


def check_rank(D: DataMatrices, mode: str) -> RankReport:
    """Numerical-rank verdict of the excitation condition for ``mode``.

    The rank cutoff is ``sigma_max * max(rows, cols) * eps * 1e3``.  The
    reported smallest singular value is the smallest one retained above the
    cutoff (0.0 when nothing is retained).  A missing coupling block in
    ``arrl`` mode is treated as identically zero, so the verdict is
    ``satisfied = False`` rather than an error.
    """
    stack = excitation_stack(D, mode)
    req = required_rank(D.n, D.m, mode)
    achieved, s = numerical_rank(stack, return_singular_values=True)
    smallest = float(s[achieved - 1]) if achieved > 0 else 0.0
    return RankReport(mode=mode, required=req, achieved=achieved,
                      satisfied=achieved >= req,
                      smallest_singular_value=smallest)
