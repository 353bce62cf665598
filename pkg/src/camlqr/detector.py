"""Set-point residual detector over the measured state channel.

The detector watches ``||xbar(t) - setpoint||_inf`` and raises an alarm at
the first time the residual stays above a calibrated threshold for a
configured number of consecutive samples.  Calibration fixes the threshold
as a margin multiple of the peak residual seen over an attack-free window,
floored at a small absolute value so that a loop that has settled to
integrator roundoff does not alarm on numerical noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCalibration, EmptyWindow
from .plant import TrajectoryLog

DEFAULT_MARGIN = 3.0
DEFAULT_PERSISTENCE = 5
DEFAULT_NOISE_FLOOR = 1e-9


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold test parameters.

    ``monitor_start`` (absolute time) restricts detection to samples at or
    after it; calibration sets it to the calibration window's end so the
    post-transient settling is not scored against a steady-state threshold.
    """

    setpoint: np.ndarray
    threshold: float
    persistence: int = DEFAULT_PERSISTENCE
    margin: float = DEFAULT_MARGIN
    noise_floor: float = DEFAULT_NOISE_FLOOR
    monitor_start: float | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "setpoint", np.asarray(self.setpoint, dtype=float).reshape(-1)
        )
        if not (self.threshold > 0.0):
            raise ValueError("threshold must be positive")
        if self.persistence < 1:
            raise ValueError("persistence must be >= 1")


def residual_series(log: TrajectoryLog, setpoint) -> np.ndarray:
    """Per-sample sup-norm deviation of the measured state from setpoint."""
    sp = np.asarray(setpoint, dtype=float).reshape(1, -1)
    return np.abs(log.xbar - sp).max(axis=1)


def calibrate(log: TrajectoryLog, margin: float = DEFAULT_MARGIN, *,
              window: tuple | None = None, setpoint=None,
              persistence: int = DEFAULT_PERSISTENCE,
              noise_floor: float = DEFAULT_NOISE_FLOOR) -> DetectorConfig:
    """Fix the detector threshold from an attack-free closed-loop log.

    ``threshold = max(margin * peak_residual_over_window, noise_floor)``.
    ``window`` is an (absolute) time pair and defaults to the whole log; the
    returned config starts monitoring at the window's end.  Raises
    :class:`~camlqr.errors.DegenerateCalibration` when the window residual is
    identically zero (a frozen log cannot calibrate a margin).
    """
    if setpoint is None:
        setpoint = np.zeros(log.n)
    if window is None:
        t_start, t_end = float(log.t[0]), float(log.t[-1])
    else:
        t_start, t_end = float(window[0]), float(window[1])
    try:
        i0, i1 = log.window_indices(t_start, t_end)
    except Exception as exc:
        raise EmptyWindow(
            f"calibration window [{t_start}, {t_end}] has no samples: {exc}"
        ) from exc
    res = residual_series(log, setpoint)[i0:i1 + 1]
    if res.size == 0:
        raise EmptyWindow("calibration window contains no samples")
    peak = float(res.max())
    if peak == 0.0:
        raise DegenerateCalibration(
            "calibration residual is identically zero; cannot fix a threshold"
        )
    threshold = max(margin * peak, noise_floor)
    return DetectorConfig(setpoint=setpoint, threshold=threshold,
                          persistence=persistence, margin=margin,
                          noise_floor=noise_floor,
                          monitor_start=float(log.t[i1]))


def detect(log: TrajectoryLog, config: DetectorConfig) -> float | None:
    """First alarm time, or ``None``.

    The alarm time is the first sample time ``t`` such that the residual
    exceeds the threshold at ``t`` and at the following
    ``persistence - 1`` samples.
    """
    res = residual_series(log, config.setpoint)
    start = 0
    if config.monitor_start is not None:
        start = int(np.searchsorted(log.t, config.monitor_start - 1e-12))
    exceed = res > config.threshold
    run = 0
    for k in range(start, res.size):
        if exceed[k]:
            run += 1
            if run >= config.persistence:
                return float(log.t[k - config.persistence + 1])
        else:
            run = 0
    return None


def alarm_details(log: TrajectoryLog, config: DetectorConfig):
    """``(alarm_time, triggering_channel)`` or ``None``.

    The channel is the index (0-based) of the largest deviation component at
    the first alarm sample.
    """
    alarm = detect(log, config)
    if alarm is None:
        return None
    k = int(np.searchsorted(log.t, alarm - 1e-12))
    dev = np.abs(log.xbar[k] - config.setpoint)
    return alarm, int(dev.argmax())
