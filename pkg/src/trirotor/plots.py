"""Render run figures to files.

Produces the standard report set for a simulation run: attitude error,
position error, body rates, rotor thrusts, and a top-down view of the
flown path against the reference. All figures are written as PNG next
to the delimited log output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from trirotor.reference import _sample
from trirotor.sim import SimResult

plt.rcParams.update({
    "figure.figsize": (6.4, 3.6),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "savefig.dpi": 140,
})


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_run_figures(result: SimResult, out_dir: str | Path) -> list[Path]:
    """Write the figure set for one run; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = result.column("t")
    written = []

    fig, ax = plt.subplots()
    ax.semilogy(t, np.maximum(result.column("psi"), 1e-16))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("attitude error")
    ax.set_title("Reduced-attitude error")
    written.append(_save(fig, out / "attitude_error.png"))

    fig, ax = plt.subplots()
    for name, label in (("ex", "x"), ("ey", "y"), ("ez", "z")):
        ax.plot(t, result.column(name), label=label)
    ax.plot(t, result.ex_norm(), "k--", label="norm")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("position error [m]")
    ax.set_title("Position error")
    ax.legend(loc="upper right", ncols=4)
    written.append(_save(fig, out / "position_error.png"))

    fig, ax = plt.subplots()
    for name, label in (("wx", "roll"), ("wy", "pitch"), ("wz", "yaw")):
        ax.plot(t, np.degrees(result.column(name)), label=label)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("body rate [deg/s]")
    ax.set_title("Angular velocity")
    ax.legend(loc="upper right", ncols=3)
    written.append(_save(fig, out / "angular_velocity.png"))

    fig, ax = plt.subplots()
    for i in (1, 2, 3):
        ax.plot(t, result.column(f"T{i}"), label=f"rotor {i}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("thrust [N]")
    ax.set_title("Rotor thrusts")
    ax.legend(loc="upper right", ncols=3)
    written.append(_save(fig, out / "rotor_thrusts.png"))

    traj = result.config.trajectory
    ref = np.array([_sample(traj.kind, traj.params, tk)[0:2] for tk in t[:: max(1, len(t) // 2000)]])
    fig, ax = plt.subplots(figsize=(4.8, 4.4))
    ax.plot(result.column("x"), result.column("y"), label="flown")
    ax.plot(ref[:, 0], ref[:, 1], "--", label="reference")
    ax.plot(result.column("x")[0], result.column("y")[0], "o", ms=5, label="start")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.set_title("Ground track")
    ax.legend(loc="best")
    written.append(_save(fig, out / "ground_track.png"))
    return written


def render_sweep_figure(
    values: np.ndarray, metrics_rows: list[dict], param: str, out_dir: str | Path
) -> Path:
    """Summary figure for a parameter sweep: key metrics vs the swept value."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
    sup = [m["sup_psi"] for m in metrics_rows]
    fin = [m["final_ex_norm"] for m in metrics_rows]
    axes[0].plot(values, sup, "o-")
    axes[0].set_xlabel(param)
    axes[0].set_ylabel("peak attitude error")
    axes[1].plot(values, fin, "o-")
    axes[1].set_xlabel(param)
    axes[1].set_ylabel("final position error [m]")
    return _save(fig, out / "sweep_summary.png")
