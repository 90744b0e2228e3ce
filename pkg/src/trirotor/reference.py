"""Reference trajectories with analytic derivatives through jerk."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

TRAJ_HOVER = 0
TRAJ_FIGURE_EIGHT = 1
TRAJ_FIGURE_EIGHT_TRUE = 2


@dataclass
class TrajectorySample:
    """Reference position and its first three time derivatives."""

    x_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    j_d: np.ndarray

    def __post_init__(self):
        self.x_d = np.asarray(self.x_d, dtype=np.float64).reshape(3)
        self.v_d = np.asarray(self.v_d, dtype=np.float64).reshape(3)
        self.a_d = np.asarray(self.a_d, dtype=np.float64).reshape(3)
        self.j_d = np.asarray(self.j_d, dtype=np.float64).reshape(3)


@njit(cache=True, nogil=True)
def _sample(kind, p, t):
    """Evaluate trajectory ``kind`` with packed params ``p`` at time ``t``.

    Returns flat (12,) array [x_d, v_d, a_d, j_d]. Parameter layout:
    hover -> p = point (3,); figure-eight -> p = [A, rate, altitude].
    """
    out = np.zeros(12)
    if kind == TRAJ_HOVER:
        out[0] = p[0]
        out[1] = p[1]
        out[2] = p[2]
        return out
    A = p[0]
    w = p[1]
    h = p[2]
    s = np.sin(w * t)
    c = np.cos(w * t)
    if kind == TRAJ_FIGURE_EIGHT:
        # one loop at constant altitude: A [sin(wt), cos(wt)]
        out[0] = A * s
        out[1] = A * c
        out[2] = h
        out[3] = A * w * c
        out[4] = -A * w * s
        out[6] = -A * w * w * s
        out[7] = -A * w * w * c
        out[9] = -A * w**3 * c
        out[10] = A * w**3 * s
        return out
    # true figure of 8: second axis runs at twice the rate
    s2 = np.sin(2.0 * w * t)
    c2 = np.cos(2.0 * w * t)
    out[0] = A * s
    out[1] = 0.5 * A * s2
    out[2] = h
    out[3] = A * w * c
    out[4] = A * w * c2
    out[6] = -A * w * w * s
    out[7] = -2.0 * A * w * w * s2
    out[9] = -A * w**3 * c
    out[10] = -4.0 * A * w**3 * c2
    return out


def _unpack(flat: np.ndarray) -> TrajectorySample:
    return TrajectorySample(flat[0:3], flat[3:6], flat[6:9], flat[9:12])


def figure_eight(
    t: float,
    amplitude: float = 2.0,
    rate: float = 2.0,
    altitude: float = 10.0,
    true_eight: bool = False,
) -> TrajectorySample:
    """Constant-altitude periodic sweep.

    The default form is ``amplitude * [sin(rate t), cos(rate t)]`` at the
    given altitude; ``true_eight`` switches the second axis to half a
    double-rate sine, which traces a proper 8.
    """
    kind = TRAJ_FIGURE_EIGHT_TRUE if true_eight else TRAJ_FIGURE_EIGHT
    return _unpack(_sample(kind, np.array([amplitude, rate, altitude]), t))


def hover(t: float, point=(0.0, 0.0, 5.0)) -> TrajectorySample:
    """Constant setpoint; all derivatives zero."""
    return _unpack(_sample(TRAJ_HOVER, np.asarray(point, dtype=np.float64), t))


@dataclass
class Trajectory:
    """A named generator plus parameters, evaluable at any time."""

    kind: int = TRAJ_FIGURE_EIGHT
    params: np.ndarray = field(default_factory=lambda: np.array([2.0, 2.0, 10.0]))

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64).reshape(3)

    def sample(self, t: float) -> TrajectorySample:
        return _unpack(_sample(self.kind, self.params, t))

    def describe(self) -> str:
        if self.kind == TRAJ_HOVER:
            return f"hover at {self.params.tolist()}"
        shape = "figure-eight (true 8)" if self.kind == TRAJ_FIGURE_EIGHT_TRUE else "figure-eight"
        return (
            f"{shape}: amplitude {self.params[0]} m, rate {self.params[1]} rad/s, "
            f"altitude {self.params[2]} m"
        )


@njit(cache=True, nogil=True)
def _fd_bounds(kind, p, horizon, m, g, grid_dt):
    """(min max-norm, max 2-norm) of f_d = m a_d + m g e3 over a time grid."""
    n_steps = int(horizon / grid_dt) + 1
    inf_norm = np.inf
    sup_norm = 0.0
    for i in range(n_steps + 1):
        t = min(i * grid_dt, horizon)
        flat = _sample(kind, p, t)
        f0 = m * flat[6]
        f1 = m * flat[7]
        f2 = m * flat[8] + m * g
        ninf = max(abs(f0), abs(f1), abs(f2))
        n2 = np.sqrt(f0 * f0 + f1 * f1 + f2 * f2)
        if ninf < inf_norm:
            inf_norm = ninf
        if n2 > sup_norm:
            sup_norm = n2
    return inf_norm, sup_norm


def validate_b2(
    traj: Trajectory,
    horizon: float,
    m: float,
    g: float,
    b2: float,
    grid_dt: float = 1e-3,
) -> tuple[bool, float]:
    """Check the outer saturation bound against the feedforward force.

    The commanded thrust vector stays away from zero only if ``b2`` is
    below the smallest max-norm of ``f_d = m a_d + m g e3`` along the
    trajectory; sampled on a fixed grid over the horizon.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    inf_norm, _ = _fd_bounds(traj.kind, traj.params, horizon, m, g, grid_dt)
    return bool(b2 < inf_norm), float(inf_norm)


def fd_sup_norm(traj: Trajectory, horizon: float, m: float, g: float, grid_dt: float = 1e-3) -> float:
    """Largest 2-norm of the feedforward force over the horizon (grid-sampled)."""
    _, sup = _fd_bounds(traj.kind, traj.params, horizon, m, g, grid_dt)
    return float(sup)
