"""Figure rendering for scenario reports.

Produces four PNG figures plus the residual trace as CSV so every plotted
curve is also available as delimited data.  Rendering uses the Agg backend
and never requires a display.
"""

from __future__ import annotations

import os

import numpy as np

from .detector import residual_series
from .errors import IoFailure

FIGURE_NAMES = (
    "states_actual.png",
    "states_measured.png",
    "gain_convergence.png",
    "detector_residual.png",
)


def _savefig(fig, path: str) -> None:
    try:
        fig.savefig(path, dpi=110)
    except OSError as exc:
        raise IoFailure(f"cannot write figure {path}: {exc}") from exc


def emit_plots(report, out_dir=None) -> list:
    """Render the standard figures for a completed scenario report.

    Returns the list of file paths written: the four figures and
    ``residual.csv`` holding the plotted detector trace.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = out_dir if out_dir is not None else report.out_dir
    os.makedirs(out, exist_ok=True)
    log = report.control_log
    twin = report.twin_log
    written = []

    # Actual states, with the attack-free twin for reference when it differs.
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in range(log.n):
        ax.plot(log.t, log.x[:, i], lw=1.0, label=f"x{i + 1}")
    if twin is not None and twin is not log:
        for i in range(twin.n):
            ax.plot(twin.t, twin.x[:, i], lw=0.8, ls="--", color="0.55",
                    label="twin" if i == 0 else None)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("actual state")
    ax.set_title("Actual plant states")
    ax.legend(loc="upper left", fontsize=7, ncol=2)
    ax.grid(True, alpha=0.3)
    path = os.path.join(out, "states_actual.png")
    _savefig(fig, path)
    plt.close(fig)
    written.append(path)

    # States as seen through the monitored channel.
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i in range(log.n):
        ax.plot(log.t, log.xbar[:, i], lw=1.0, label=f"xbar{i + 1}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("measured state")
    ax.set_title("Measured plant states")
    ax.legend(loc="upper left", fontsize=7, ncol=2)
    ax.grid(True, alpha=0.3)
    path = os.path.join(out, "states_measured.png")
    _savefig(fig, path)
    plt.close(fig)
    written.append(path)

    # Learner convergence on a log scale.
    fig, ax = plt.subplots(figsize=(6, 4))
    result = report.gain_result
    if result is not None and result.iterates:
        ks = np.arange(1, len(result.iterates) + 1)
        norms = np.array([max(it[2], 1e-300) for it in result.iterates])
        ax.semilogy(ks, norms, marker="o", lw=1.2)
        ax.set_xticks(ks)
    ax.set_xlabel("iteration")
    ax.set_ylabel("gain update norm")
    ax.set_title("Learner convergence")
    ax.grid(True, which="both", alpha=0.3)
    path = os.path.join(out, "gain_convergence.png")
    _savefig(fig, path)
    plt.close(fig)
    written.append(path)

    # Detector residual with threshold, onset, and alarm markers.
    setpoint = (report.detector_config.setpoint
                if report.detector_config is not None
                else np.zeros(log.n))
    residual = residual_series(log, setpoint)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.semilogy(log.t, np.maximum(residual, 1e-300), lw=1.0,
                label="residual")
    if report.detector_config is not None:
        ax.axhline(report.detector_config.threshold, color="tab:red",
                   ls="--", lw=1.0, label="threshold")
    if report.attack is not None:
        ax.axvline(report.attack["onset"], color="tab:orange", ls=":",
                   lw=1.2, label="attack onset")
        if report.attack["alarm_time"] is not None:
            ax.axvline(report.attack["alarm_time"], color="tab:red", ls="-",
                       lw=1.2, label="alarm")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("sup-norm residual")
    ax.set_title("Detector residual")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    path = os.path.join(out, "detector_residual.png")
    _savefig(fig, path)
    plt.close(fig)
    written.append(path)

    # The plotted residual trace as delimited data.
    path = os.path.join(out, "residual.csv")
    try:
        table = np.column_stack([log.t, residual])
        np.savetxt(path, table, fmt="%.11e", delimiter=",",
                   header="t,residual", comments="")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    written.append(path)
    return written
