"""Two-phase adversary: passive identification, then covert injection.

Phase one fits a discrete one-step model to the eavesdropped measured-state
and applied-input channels and lifts it to continuous time through a matrix
logarithm.  Phase two runs a surrogate model ``x_tilde' = A~ x_tilde + B~ z``
from a zero initial state and subtracts it from the sensor channel, so the
injection ``z`` stays invisible exactly when the surrogate matches the true
plant.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    Divergence,
    IllConditioned,
    InsufficientData,
    IoFailure,
    LogBranch,
)
from .linalg import RANK_CUTOFF_FACTOR, _as_float_matrix
from .plant import DEFAULT_BLOWUP_BOUND, CamouflageMap, TrajectoryLog

IDENTIFICATION_MODES = ("estimated", "worst_case_exact", "worst_case_camouflaged")


@dataclass(frozen=True)
class IdentifiedModel:
    """Surrogate plant matrices held by the attacker."""

    A_tilde: np.ndarray
    B_tilde: np.ndarray
    fit_residual: float
    mode: str

    def __post_init__(self):
        A = _as_float_matrix(self.A_tilde, "A_tilde")
        B = _as_float_matrix(self.B_tilde, "B_tilde")
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError("surrogate matrices have inconsistent shapes")
        if self.mode not in IDENTIFICATION_MODES:
            raise ValueError(
                f"mode must be one of {IDENTIFICATION_MODES}, got {self.mode!r}"
            )
        object.__setattr__(self, "A_tilde", A)
        object.__setattr__(self, "B_tilde", B)

    def save(self, directory, prefix: str = "identified") -> list:
        """Write one CSV per matrix plus a JSON provenance sidecar."""
        os.makedirs(directory, exist_ok=True)
        paths = []
        try:
            for name, M in (("A_tilde", self.A_tilde), ("B_tilde", self.B_tilde)):
                path = os.path.join(directory, f"{prefix}_{name}.csv")
                np.savetxt(path, M, fmt="%.11e", delimiter=",")
                paths.append(path)
            meta = os.path.join(directory, f"{prefix}_meta.json")
            with open(meta, "w", encoding="utf-8") as fh:
                json.dump({"mode": self.mode,
                           "fit_residual": self.fit_residual}, fh, indent=2)
                fh.write("\n")
            paths.append(meta)
        except OSError as exc:
            raise IoFailure(f"cannot write identified model: {exc}") from exc
        return paths


@dataclass(frozen=True)
class ZetaSignal:
    """Per-channel injection generator: constant, sinusoid, or ramp.

    ``magnitude`` broadcasts over channels (scalar or length-``m``).  For the
    sinusoid, ``freq`` is in rad/s and the phase applies to the elapsed time
    since onset; the ramp grows by ``magnitude`` per second after onset.
    """

    kind: str
    magnitude: object = 1.0
    freq: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "ramp"):
            raise ValueError(f"unknown injection kind {self.kind!r}")

    def evaluate(self, elapsed: float, m: int) -> np.ndarray:
        mag = np.broadcast_to(np.asarray(self.magnitude, dtype=float),
                              (m,)).copy()
        if self.kind == "constant":
            return mag
        if self.kind == "sinusoid":
            return mag * np.sin(self.freq * elapsed + self.phase)
        return mag * elapsed


@dataclass(frozen=True)
class AttackPlan:
    """Covert-attack schedule: onset time, injection generator, surrogate."""

    onset: float
    zeta: ZetaSignal
    identified: IdentifiedModel

    def __post_init__(self):
        if self.onset < 0.0:
            raise ValueError("onset must be nonnegative")

    @property
    def m(self) -> int:
        return self.identified.B_tilde.shape[1]

    def zeta_at(self, t: float) -> np.ndarray:
        """Injection value; identically zero before onset."""
        if t < self.onset:
            return np.zeros(self.m)
        return self.zeta.evaluate(float(t) - self.onset, self.m)


@dataclass
class AttackerState:
    """Internal surrogate state; starts at exactly zero at attack onset."""

    x_tilde: np.ndarray

    @classmethod
    def at_onset(cls, n: int) -> "AttackerState":
        return cls(x_tilde=np.zeros(n))


def eavesdrop_identify(log: TrajectoryLog, dt: float | None = None) -> IdentifiedModel:
    """Identify a continuous-time model from the (xbar, u) channels only.

    Fits the discrete one-step map ``xbar_{k+1} = A_d xbar_k + B_d ubar_k``
    by least squares over all consecutive sample pairs, with ``ubar_k`` the
    midpoint ``(u_k + u_{k+1}) / 2`` of the logged input (the input moves
    within a sampling interval, and the centered value keeps the fit error at
    second order in the step).  The discrete map is lifted to continuous time
    via the principal matrix logarithm of the augmented transition
    ``[[A_d, B_d], [0, I]]``.

    Raises :class:`~camlqr.errors.IllConditioned` when the regressor's null
    space touches the state coordinates (the drift matrix would then not be
    determined by the data; pure input-direction deficiency, e.g. an
    identically zero input, is resolved by the minimum-norm fit).  Raises
    :class:`~camlqr.errors.LogBranch` when the fitted discrete map has an
    eigenvalue on the closed negative real axis.
    """
    if dt is None:
        dt = log.dt
    elif abs(dt - log.dt) > 1e-12 * max(1.0, log.dt):
        raise ValueError(f"dt = {dt} disagrees with the log step {log.dt}")
    n, m = log.n, log.m
    if log.n_samples < n + m + 1:
        raise InsufficientData(
            f"identification needs at least {n + m + 1} samples, "
            f"log has {log.n_samples}"
        )
    X = log.xbar[:-1]
    X_next = log.xbar[1:]
    U_mid = 0.5 * (log.u[:-1] + log.u[1:])
    G = np.hstack([X, U_mid])
    U_svd, s, Vt = np.linalg.svd(G, full_matrices=False)
    cutoff = s[0] * max(G.shape) * np.finfo(float).eps * RANK_CUTOFF_FACTOR \
        if s.size and s[0] > 0 else 0.0
    rank = int((s > cutoff).sum())
    if rank == 0:
        raise IllConditioned("eavesdropped channels are identically zero")
    null = Vt[s <= cutoff]
    for v in null:
        if np.linalg.norm(v[:n]) > 1e-6:
            raise IllConditioned(
                "regressor null space touches the state coordinates; the "
                "drift matrix is not identifiable from this log"
            )
    s_inv = np.zeros_like(s)
    s_inv[:rank] = 1.0 / s[:rank]
    coeffs = Vt.T @ (s_inv[:, None] * (U_svd.T @ X_next))
    A_d = coeffs[:n].T
    B_d = coeffs[n:].T
    residual = X_next - G @ coeffs
    fit_residual = float(np.sqrt(np.mean(residual ** 2)))

    M_d = np.zeros((n + m, n + m))
    M_d[:n, :n] = A_d
    M_d[:n, n:] = B_d
    M_d[n:, n:] = np.eye(m)
    eigs = np.linalg.eigvals(M_d)
    imag_tol = 1e-12 * np.maximum(np.abs(eigs), 1.0)
    if np.any((eigs.real <= 0.0) & (np.abs(eigs.imag) <= imag_tol)):
        raise LogBranch(
            "fitted discrete map has an eigenvalue on the closed negative "
            "real axis; the principal logarithm is undefined"
        )
    L = scipy.linalg.logm(M_d) / dt
    imag_norm = float(np.linalg.norm(np.imag(L)))
    if imag_norm > 1e-8 * max(1.0, float(np.linalg.norm(np.real(L)))):
        raise LogBranch(
            f"matrix logarithm returned a significant imaginary part "
            f"({imag_norm:.3e}); no real continuous-time model exists"
        )
    L = np.real(L)
    return IdentifiedModel(A_tilde=L[:n, :n], B_tilde=L[:n, n:],
                           fit_residual=fit_residual, mode="estimated")


def exact_model(true_model) -> IdentifiedModel:
    """Surrogate equal to the true plant (the strongest attacker)."""
    return IdentifiedModel(A_tilde=true_model.A.copy(),
                           B_tilde=true_model.B.copy(),
                           fit_residual=0.0, mode="worst_case_exact")


def worst_case_model(true_model, camouflage: CamouflageMap | None, t0: float,
                     eps_sc: float, sign: float = -1.0) -> IdentifiedModel:
    """Surrogate an attacker would hold after coupled-data identification.

    The drift estimate is shifted by the coupling frozen at ``t0`` and scaled:
    ``A_tilde = A + sign * eps_sc * f(t0) * B C``; the input matrix is taken
    as exactly known (``B_tilde = B``).  With no coupling (or ``eps_sc = 0``)
    the surrogate degenerates to the true drift.  Test/scenario use only: it
    requires access to the true model.
    """
    A = true_model.A
    B = true_model.B
    if camouflage is None:
        shift = np.zeros_like(A)
    else:
        shift = float(sign) * float(eps_sc) * camouflage.f_value(t0) * \
            (B @ camouflage.C)
    return IdentifiedModel(A_tilde=A + shift, B_tilde=B.copy(),
                           fit_residual=0.0, mode="worst_case_camouflaged")


def covert_attack_step(state: AttackerState, identified: IdentifiedModel,
                       zeta_t: np.ndarray, h: float):
    """Advance the surrogate one inner step and return the compensation.

    Integrates ``x_tilde' = A~ x_tilde + B~ zeta`` by one classical
    Runge-Kutta step of width ``h`` with the injection held at ``zeta_t``
    over the step, and returns ``(x_tilde_next, compensation)`` where the
    compensation is the value the plant subtracts from the sensor channel.
    For time-varying injections prefer the integrated co-simulation in
    :func:`camlqr.plant.simulate`, which evaluates the injection at the
    stage times.
    """
    At = identified.A_tilde
    Bt = identified.B_tilde
    x = np.asarray(state.x_tilde, dtype=float).reshape(-1)
    z = np.asarray(zeta_t, dtype=float).reshape(-1)
    forcing = Bt @ z

    def f(v):
        return At @ v + forcing

    k1 = f(x)
    k2 = f(x + (h / 2.0) * k1)
    k3 = f(x + (h / 2.0) * k2)
    k4 = f(x + h * k3)
    x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if np.abs(x_next).max() > DEFAULT_BLOWUP_BOUND:
        raise Divergence(
            f"surrogate state exceeded blow-up bound {DEFAULT_BLOWUP_BOUND:.3g}"
        )
    return x_next, x_next.copy()
