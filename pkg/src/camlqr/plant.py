"""Continuous-time LTI plant simulation with pluggable signal channels.

The simulator integrates

    dx/dt = A x + B (u + psi),    u = -K xbar + u0 + zeta,

with classical fixed-step 4th-order Runge-Kutta at an internal step of one
tenth of the logging interval.  All exogenous signals (exploration input
``u0``, coupling gain ``f``, injection ``zeta``) are evaluated continuously at
the Runge-Kutta stage times; nothing is held zero-order.  The feedback acts on
the measured channel ``xbar`` (the only state a controller can see), which
equals the true state whenever no injection is active.

Alongside the physical state the integrator carries running quadrature states
for the Kronecker products ``x (x) x``, ``x (x) u0`` and ``x (x) psi``; the
data pipeline uses these to form window integrals that are exact to integrator
accuracy instead of sample-rate accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Divergence, IoFailure, NotHurwitz, NotStabilizing, WindowOutOfRange
from .linalg import HURWITZ_TOL, CostSpec, _as_float_matrix

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

#: Default sup-norm blow-up guard for simulated states.
DEFAULT_BLOWUP_BOUND = 1e6


@dataclass(frozen=True)
class LTIModel:
    """True plant matrices ``A`` (n x n) and ``B`` (n x m).

    Construction verifies finiteness, dimensional consistency, and
    stabilizability of the pair via a numerical PBH test: every eigenvalue
    with real part >= -1e-12 must leave ``[lambda I - A, B]`` at full row
    rank.
    """

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _as_float_matrix(self.A, "A")
        B = _as_float_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise ValueError(f"B must have {A.shape[0]} rows, got {B.shape}")
        n = A.shape[0]
        eps = np.finfo(float).eps
        for lam in np.linalg.eigvals(A):
            if lam.real < HURWITZ_TOL:
                continue
            pencil = np.hstack([lam * np.eye(n) - A, B.astype(complex)])
            s = np.linalg.svd(pencil, compute_uv=False)
            if s[0] == 0.0 or s[-1] <= s[0] * max(pencil.shape) * eps * 1e3:
                raise NotStabilizing(
                    f"(A, B) is not stabilizable: mode at {lam:.6g} is "
                    "uncontrollable and not asymptotically stable"
                )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class ExplorationSignal:
    """Per-channel sum-of-sinusoids probing input.

    ``amplitudes``, ``frequencies`` (rad/s) and ``phases`` (rad) all have
    shape ``(m, terms)``.  The factory :func:`make_sum_of_sinusoids` scales the
    amplitudes at construction so the realized signal respects
    ``sup_t ||u0(t)||_inf <= bound`` without any clipping.
    """

    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    seed: int
    bound: float

    def __post_init__(self):
        for name in ("amplitudes", "frequencies", "phases"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be 2-D (channels x terms)")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)
        if self.amplitudes.shape != self.frequencies.shape or \
                self.amplitudes.shape != self.phases.shape:
            raise ValueError("amplitude/frequency/phase shapes differ")

    @property
    def m(self) -> int:
        return self.amplitudes.shape[0]

    def evaluate(self, t: float) -> np.ndarray:
        """Signal value at a single time, shape ``(m,)``."""
        return (
            self.amplitudes * np.sin(self.frequencies * float(t) + self.phases)
        ).sum(axis=1)

    def evaluate_many(self, ts) -> np.ndarray:
        """Signal values on a time grid, shape ``(m, len(ts))``."""
        ts = np.asarray(ts, dtype=float).reshape(-1)
        out = np.empty((self.m, ts.size))
        chunk = 20000
        for lo in range(0, ts.size, chunk):
            hi = min(lo + chunk, ts.size)
            block = ts[lo:hi]
            for c in range(self.m):
                out[c, lo:hi] = (
                    self.amplitudes[c][:, None]
                    * np.sin(
                        self.frequencies[c][:, None] * block[None, :]
                        + self.phases[c][:, None]
                    )
                ).sum(axis=0)
        return out


def make_sum_of_sinusoids(seed: int, m: int, terms_per_channel: int = 100,
                          amplitude: float = 1.0,
                          freq_range: tuple = (0.5, 100.0)) -> ExplorationSignal:
    """Deterministically construct a sum-of-sinusoids exploration signal.

    Frequencies are drawn without replacement from a quantized grid spanning
    ``freq_range`` so the channels carry mutually distinct frequency sets,
    which promotes the excitation rank condition.  Raw per-term amplitudes and
    phases are seeded-uniform; each channel is then rescaled by its empirical
    sup over a dense 120 s probe grid (with a 1.02 safety factor) so that
    ``||u0||_inf <= amplitude`` holds without clipping.

    Callers must keep ``freq_range`` below ``pi / dt`` of the log they intend
    to record so the sample rate resolves the signal.
    """
    if terms_per_channel < 1:
        raise ValueError("terms_per_channel must be >= 1")
    lo, hi = float(freq_range[0]), float(freq_range[1])
    if not (0.0 < lo < hi):
        raise ValueError("freq_range must satisfy 0 < low < high")
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    total = m * terms_per_channel
    grid = np.linspace(lo, hi, max(4096, 2 * total))
    freqs = grid[rng.choice(grid.size, size=total, replace=False)]
    freqs = freqs.reshape(m, terms_per_channel)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(m, terms_per_channel))
    raw = rng.uniform(0.5, 1.0, size=(m, terms_per_channel))
    probe = ExplorationSignal(raw, freqs, phases, seed=seed, bound=np.inf)
    ts = np.arange(0.0, 120.0, 1.0 / 1600.0)
    sup = np.abs(probe.evaluate_many(ts)).max(axis=1)
    if amplitude == 0.0:
        amps = np.zeros_like(raw)
    else:
        amps = raw * (float(amplitude) / (1.02 * sup))[:, None]
    return ExplorationSignal(amps, freqs, phases, seed=seed,
                             bound=float(abs(amplitude)))


@dataclass(frozen=True)
class CamouflageMap:
    """Bounded state-dependent actuation coupling ``psi(t, x) = f(t) C x``.

    ``f`` maps a time (scalar or 1-D array) to a gain; ``C`` is ``m x n``;
    ``gamma`` bounds the induced map: construction verifies
    ``sup_t |f(t)| * sigma_max(C) <= gamma`` by probing ``|f|`` on a dense
    grid over [0, 200] s.
    """

    f: object
    C: np.ndarray
    gamma: float

    def __post_init__(self):
        C = _as_float_matrix(self.C, "C")
        object.__setattr__(self, "C", C)
        if not (self.gamma > 0.0):
            raise ValueError("gamma must be positive")
        ts = np.linspace(0.0, 200.0, 40001)
        sup_f = float(np.abs(self._f_many(ts)).max())
        sigma = float(np.linalg.svd(C, compute_uv=False)[0]) if C.size else 0.0
        object.__setattr__(self, "sup_abs_f", sup_f)
        object.__setattr__(self, "sigma_max_C", sigma)
        if sup_f * sigma > self.gamma * (1.0 + 1e-9):
            raise ValueError(
                f"coupling bound violated: sup|f| * sigma_max(C) = "
                f"{sup_f * sigma:.6g} exceeds gamma = {self.gamma:.6g}"
            )

    def _f_many(self, ts: np.ndarray) -> np.ndarray:
        try:
            vals = np.asarray(self.f(ts), dtype=float)
            if vals.shape == ts.shape:
                return vals
        except Exception:
            pass
        return np.array([float(self.f(t)) for t in ts])

    def f_value(self, t: float) -> float:
        return float(self.f(float(t)))

    def psi(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.f_value(t) * (self.C @ x)

    def validate_nonvanishing(self, ts) -> None:
        """Reject gains that vanish or change sign on the given time grid.

        Used before exploration: the misdirection property needs a coupling
        gain that stays away from zero throughout the data window.
        """
        vals = self._f_many(np.asarray(ts, dtype=float).reshape(-1))
        if np.any(vals == 0.0) or np.any(vals[:-1] * vals[1:] < 0.0):
            raise ValueError(
                "coupling gain f(t) vanishes inside the exploration window"
            )


CSV_SIG_DIGITS = 12


@dataclass
class TrajectoryLog:
    """Uniformly sampled record of one simulation.

    Channels (each with one row per sample): true state ``x``, exploration
    input ``u0``, total applied input ``u``, coupling output ``psi``, measured
    state ``xbar``, injection ``zeta``.  ``psi`` may be ``None`` for hand
    built logs that genuinely lack a coupling channel.

    ``ixx``, ``ixu0`` and ``ixpsi`` optionally carry the integrator-computed
    running integrals of ``x (x) x``, ``x (x) u0`` and ``x (x) psi`` from the
    first sample; logs loaded from CSV do not have them.
    """

    t: np.ndarray
    x: np.ndarray
    u0: np.ndarray
    u: np.ndarray
    psi: np.ndarray | None
    xbar: np.ndarray
    zeta: np.ndarray
    dt: float
    ixx: np.ndarray | None = None
    ixu0: np.ndarray | None = None
    ixpsi: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        for name in ("x", "u0", "u", "psi", "xbar", "zeta",
                     "ixx", "ixu0", "ixpsi"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.atleast_2d(np.asarray(val, dtype=float))
            if arr.shape[0] != self.t.size:
                raise ValueError(
                    f"channel {name} has {arr.shape[0]} rows, "
                    f"expected {self.t.size}"
                )
            setattr(self, name, arr)
        if not (self.dt > 0.0):
            raise ValueError("dt must be positive")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.u.shape[1]

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def has_exact_integrals(self) -> bool:
        return self.ixx is not None and self.ixu0 is not None

    def window_indices(self, t_start: float, t_end: float) -> tuple:
        """Sample-index pair covering ``[t_start, t_end]`` (snapped inward)."""
        if not (t_start <= t_end):
            raise WindowOutOfRange(
                f"window start {t_start} exceeds end {t_end}"
            )
        t0, t_last = self.t[0], self.t[-1]
        tol = 1e-9 * max(1.0, abs(t_last))
        if t_start < t0 - tol or t_end > t_last + tol:
            raise WindowOutOfRange(
                f"window [{t_start}, {t_end}] outside log span "
                f"[{t0}, {t_last}]"
            )
        i0 = int(math.ceil((t_start - t0) / self.dt - 1e-9))
        i1 = int(math.floor((t_end - t0) / self.dt + 1e-9))
        i0 = max(i0, 0)
        i1 = min(i1, self.t.size - 1)
        if i1 < i0:
            raise WindowOutOfRange(
                f"window [{t_start}, {t_end}] contains no samples"
            )
        return i0, i1

    def csv_header(self) -> str:
        n, m = self.n, self.m
        cols = (["t"]
                + [f"x{i}" for i in range(1, n + 1)]
                + [f"u0{j}" for j in range(1, m + 1)]
                + [f"u{j}" for j in range(1, m + 1)]
                + [f"psi{j}" for j in range(1, m + 1)]
                + [f"xbar{i}" for i in range(1, n + 1)]
                + [f"zeta{j}" for j in range(1, m + 1)])
        return ",".join(cols)

    def to_csv(self, path) -> None:
        """Write the log with 12 significant digits per value.

        The on-disk format always carries a coupling column block; an absent
        in-memory channel is serialized as zeros.
        """
        psi = self.psi if self.psi is not None else np.zeros_like(self.u)
        data = np.hstack([
            self.t[:, None], self.x, self.u0, self.u, psi, self.xbar,
            self.zeta,
        ])
        try:
            np.savetxt(path, data, fmt=f"%.{CSV_SIG_DIGITS - 1}e",
                       delimiter=",", header=self.csv_header(), comments="")
        except OSError as exc:
            raise IoFailure(f"cannot write trajectory CSV {path}: {exc}") from exc

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        """Load a log written by :meth:`to_csv`; dimensions are inferred."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                header = fh.readline().strip()
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except OSError as exc:
            raise IoFailure(f"cannot read trajectory CSV {path}: {exc}") from exc
        names = header.split(",")
        n = sum(1 for c in names if c.startswith("x") and c[1:].isdigit())
        m = sum(1 for c in names if c.startswith("u0") and c[2:].isdigit())
        if len(names) != 1 + 2 * n + 4 * m or names[0] != "t":
            raise IoFailure(f"unrecognized trajectory CSV header in {path}")
        if data.shape[0] < 2:
            raise IoFailure(f"trajectory CSV {path} has fewer than two samples")
        t = data[:, 0]
        ofs = 1
        blocks = []
        for width in (n, m, m, m, n, m):
            blocks.append(data[:, ofs:ofs + width])
            ofs += width
        x, u0, u, psi, xbar, zeta = blocks
        return cls(t=t, x=x, u0=u0, u=u, psi=psi, xbar=xbar, zeta=zeta,
                   dt=float(t[1] - t[0]))


def simulate(model: LTIModel, x0, horizon: float, dt: float, *,
             controller_gain=None, exploration: ExplorationSignal | None = None,
             camouflage: CamouflageMap | None = None, attack=None,
             start_time: float = 0.0,
             blowup_bound: float = DEFAULT_BLOWUP_BOUND) -> TrajectoryLog:
    """Integrate the closed/open loop and return the sampled log.

    ``attack``, when present, must expose ``onset`` (seconds), ``zeta_at(t)``
    (the injection, zero before onset) and ``identified`` (the surrogate
    matrices ``A_tilde``/``B_tilde``); the surrogate's internal state starts
    at zero and is co-integrated on the same Runge-Kutta stage times as the
    plant, and the measured channel is ``xbar = x - x_tilde``.  Feedback acts
    on ``xbar``.  A :class:`~camlqr.errors.Divergence` error is raised when
    either the true or the surrogate state exceeds ``blowup_bound`` in
    sup-norm.
    """
    A, B = model.A, model.B
    n, m = model.n, model.m
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != n:
        raise ValueError(f"x0 must have length {n}")
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    if horizon < dt:
        raise ValueError("horizon must be at least one sampling interval")
    K = None
    if controller_gain is not None:
        K = _as_float_matrix(controller_gain, "controller_gain")
        if K.shape != (m, n):
            raise ValueError(f"controller_gain must be {m}x{n}, got {K.shape}")
    n_steps = int(math.floor(horizon / dt + 1e-9))
    if attack is not None:
        At = _as_float_matrix(attack.identified.A_tilde, "A_tilde")
        Bt = _as_float_matrix(attack.identified.B_tilde, "B_tilde")
        if At.shape != (n, n) or Bt.shape != (n, m):
            raise ValueError("surrogate model dimensions do not match plant")
        end = start_time + n_steps * dt
        if not (start_time <= attack.onset <= end):
            raise ValueError(
                f"attack onset {attack.onset} outside simulated span "
                f"[{start_time}, {end}]"
            )
    C = camouflage.C if camouflage is not None else None
    if C is not None and C.shape != (m, n):
        raise ValueError(f"camouflage mixing matrix must be {m}x{n}")

    zeros_m = np.zeros(m)
    zeros_n = np.zeros(n)

    def u0_at(t):
        return exploration.evaluate(t) if exploration is not None else zeros_m

    def zeta_at(t):
        return attack.zeta_at(t) if attack is not None else zeros_m

    def signals(t, x, xt):
        u0 = u0_at(t)
        zt = zeta_at(t)
        psi = camouflage.f_value(t) * (C @ x) if camouflage is not None else zeros_m
        u = u0 + zt
        if K is not None:
            u = u - K @ (x - xt)
        return u0, zt, psi, u

    def deriv(t, y):
        x = y[:n]
        xt = y[n:2 * n]
        u0, zt, psi, u = signals(t, x, xt)
        dx = A @ x + B @ (u + psi)
        dxt = At @ xt + Bt @ zt if attack is not None else zeros_n
        return np.concatenate((dx, dxt, np.kron(x, x), np.kron(x, u0),
                               np.kron(x, psi)))

    y = np.concatenate((x0, np.zeros(n + n * n + 2 * n * m)))
    h = dt / 10.0

    t_log = start_time + dt * np.arange(n_steps + 1)
    xs = np.empty((n_steps + 1, n))
    u0s = np.empty((n_steps + 1, m))
    us = np.empty((n_steps + 1, m))
    psis = np.empty((n_steps + 1, m))
    xbars = np.empty((n_steps + 1, n))
    zetas = np.empty((n_steps + 1, m))
    ixxs = np.empty((n_steps + 1, n * n))
    ixu0s = np.empty((n_steps + 1, n * m))
    ixpsis = np.empty((n_steps + 1, n * m))

    def record(k, t, y):
        x = y[:n]
        xt = y[n:2 * n]
        if np.abs(x).max() > blowup_bound or np.abs(xt).max() > blowup_bound:
            raise Divergence(
                f"state exceeded blow-up bound {blowup_bound:.3g} at t = {t:.6g}"
            )
        u0, zt, psi, u = signals(t, x, xt)
        xs[k] = x
        u0s[k] = u0
        us[k] = u
        psis[k] = psi
        xbars[k] = x - xt
        zetas[k] = zt
        ofs = 2 * n
        ixxs[k] = y[ofs:ofs + n * n]
        ixu0s[k] = y[ofs + n * n:ofs + n * n + n * m]
        ixpsis[k] = y[ofs + n * n + n * m:]

    record(0, start_time, y)
    for k in range(n_steps):
        base = k * 10
        for j in range(10):
            t = start_time + (base + j) * h
            k1 = deriv(t, y)
            k2 = deriv(t + h / 2.0, y + (h / 2.0) * k1)
            k3 = deriv(t + h / 2.0, y + (h / 2.0) * k2)
            k4 = deriv(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        record(k + 1, t_log[k + 1], y)

    return TrajectoryLog(t=t_log, x=xs, u0=u0s, u=us, psi=psis, xbar=xbars,
                         zeta=zetas, dt=dt, ixx=ixxs, ixu0=ixu0s, ixpsi=ixpsis)


def multi_agent_benchmark():
    """Built-in six-agent diffusive-coupling benchmark.

    Returns ``(model, cost, x0)``: a symmetric drift matrix with zero row
    sums (one marginally stable consensus mode), input matrix ``5 * I``,
    weights ``Q = 10 I`` and ``R = I``, and the reference initial state.
    """
    A = np.array([
        [-5.0,  2.0,  3.0,  0.0,  0.0,  0.0],
        [ 2.0, -6.0,  0.0,  0.0,  1.0,  3.0],
        [ 3.0,  0.0, -5.0,  2.0,  0.0,  0.0],
        [ 0.0,  0.0,  2.0, -2.0,  0.0,  0.0],
        [ 0.0,  1.0,  0.0,  0.0, -4.0,  3.0],
        [ 0.0,  3.0,  0.0,  0.0,  3.0, -6.0],
    ])
    B = 5.0 * np.eye(6)
    model = LTIModel(A=A, B=B)
    cost = CostSpec(Q=10.0 * np.eye(6), R=np.eye(6))
    x0 = np.array([0.3, 0.5, 0.4, 0.8, 0.9, 0.6])
    return model, cost, x0


def benchmark_camouflage() -> CamouflageMap:
    """Reference coupling map used by the built-in covert-learning scenario:
    ``f(t) = 0.3 (sin t + cos t + 0.02)`` routed through an identity mixer.
    """
    gamma = 0.3 * (np.sqrt(2.0) + 0.02)
    return CamouflageMap(
        f=lambda t: 0.3 * (np.sin(t) + np.cos(t) + 0.02),
        C=np.eye(6),
        gamma=gamma,
    )


def compute_cost(log: TrajectoryLog, cost: CostSpec, t_start: float,
                 t_end: float) -> float:
    """Trapezoidal quadrature of ``x'Qx + u'Ru`` over ``[t_start, t_end]``.

    Uses the actual (not measured) state channel; window endpoints are
    snapped inward to the sampling grid.
    """
    i0, i1 = log.window_indices(t_start, t_end)
    x = log.x[i0:i1 + 1]
    u = log.u[i0:i1 + 1]
    integrand = np.einsum("ij,jk,ik->i", x, cost.Q, x) + \
        np.einsum("ij,jk,ik->i", u, cost.R, u)
    if integrand.size < 2:
        return 0.0
    return float(_trapezoid(integrand, dx=log.dt))


def iss_bound(model: LTIModel, controller_gain, x0, sup_u0: float,
              sup_psi: float) -> float:
    """Explicit bounded-input state bound for a stabilized loop.

    From the eigen-decomposition ``A - BK = V diag(lambda) V^-1`` with decay
    rate ``lam = -max Re lambda`` and transient factor ``kappa = cond_2(V)``,
    every trajectory of ``dx/dt = (A - BK) x + B (u0 + psi)`` satisfies

        sup_t ||x(t)||_2 <= kappa ||x0||_2
                            + (kappa ||B||_2 / lam) (sup||u0|| + sup||psi||).
    """
    A_cl = model.A - model.B @ np.asarray(controller_gain, dtype=float)
    eigs, V = np.linalg.eig(A_cl)
    alpha = float(eigs.real.max())
    if alpha >= HURWITZ_TOL:
        raise NotHurwitz(
            f"closed loop is not Hurwitz (spectral abscissa {alpha:.3e})"
        )
    sv = np.linalg.svd(V, compute_uv=False)
    kappa = float(sv[0] / sv[-1])
    lam = -alpha
    norm_b = float(np.linalg.norm(model.B, 2))
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    return kappa * float(np.linalg.norm(x0)) + \
        kappa * norm_b * (float(sup_u0) + float(sup_psi)) / lam
