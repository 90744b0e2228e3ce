"""Pre-flight gain certification.

Machine-checks the sufficient conditions under which the combined
attitude/position loops are exponentially convergent: admissible cross
coupling ``c`` for the translational Lyapunov function, positive
definiteness of the translational quadratic form, a spectral condition
tying the attitude gains to the worst-case translational coupling, the
saturation-limit nesting, and the feedforward-force floor. Failures are
reported, not raised: the conditions are sufficient and deliberately
conservative, and the stock gain sets do not satisfy the spectral one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from trirotor.attitude import AttitudeCommand, AttitudeGains, basin_check, desired_omega
from trirotor.geometry import attitude_error
from trirotor.plant import RigidBodyState
from trirotor.position import PositionGains
from trirotor.reference import Trajectory, fd_sup_norm, validate_b2


@dataclass
class GainCertificate:
    """Report of every certified condition plus the numbers behind it."""

    k_x: float
    k_v: float
    k1: float
    k2_roots: tuple[float, float]
    theta0: float
    c: float
    c_max: float
    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray
    lambda_min_W1: float
    W2_norm: float
    condition_lhs: float
    condition_rhs: float
    beta: float
    fd_sup: float
    fd_inf_max_norm: float
    b2: float
    passes: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(self.passes.values())

    def as_dict(self) -> dict:
        return {
            "k_x": self.k_x,
            "k_v": self.k_v,
            "k1": self.k1,
            "k2_roots": list(self.k2_roots),
            "theta0_rad": self.theta0,
            "c": self.c,
            "c_max": self.c_max,
            "W1": self.W1.tolist(),
            "W2": self.W2.tolist(),
            "W3": self.W3.tolist(),
            "lambda_min_W1": self.lambda_min_W1,
            "W2_norm": self.W2_norm,
            "condition_lhs": self.condition_lhs,
            "condition_rhs": self.condition_rhs,
            "beta": self.beta,
            "fd_sup_norm": self.fd_sup,
            "fd_inf_max_norm": self.fd_inf_max_norm,
            "b2": self.b2,
            "passes": dict(self.passes),
            "all_pass": self.all_pass,
            "notes": list(self.notes),
        }


def derive_k2(k_x: float, k_v: float) -> tuple[float, float]:
    """Loop gains k2 compatible with (k_x, k_v): roots of k2^2 - k_v k2 + k_x.

    Returns (smaller, larger); they coincide at the double root.
    """
    disc = k_v * k_v - 4.0 * k_x
    if disc < 0:
        raise ValueError("no real k2 exists for these (k_x, k_v)")
    r = math.sqrt(disc)
    return ((k_v - r) / 2.0, (k_v + r) / 2.0)


def c_bound(k_x: float, k_v: float, m: float, theta0: float) -> float:
    """Largest admissible Lyapunov cross-weight for tilt excursions up to theta0."""
    if not 0.0 < theta0 < math.pi / 2.0:
        raise ValueError("theta0 must lie in (0, pi/2)")
    s = math.sin(theta0)
    t1 = (
        k_x * k_v * (1.0 - s) ** 2
        / (k_x * (1.0 - s) + k_v**2 * (1.0 + s) ** 2 / (4.0 * m))
    )
    t2 = k_v * (1.0 - s)
    t3 = math.sqrt(k_x / m)
    return min(t1, t2, t3)


def _lambda_min_2x2(A: np.ndarray) -> float:
    half_tr = 0.5 * (A[0, 0] + A[1, 1])
    rad = math.sqrt((0.5 * (A[0, 0] - A[1, 1])) ** 2 + A[0, 1] * A[1, 0])
    return half_tr - rad


def _spectral_norm_2x2(A: np.ndarray) -> float:
    fro2 = float(np.sum(A * A))
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    inner = fro2 * fro2 - 4.0 * det * det
    if inner < 0.0:
        inner = 0.0
    return math.sqrt(0.5 * (fro2 + math.sqrt(inner)))


def build_certificate(
    position: PositionGains,
    attitude: AttitudeGains,
    m: float,
    traj: Trajectory,
    horizon: float,
    theta0: float,
    c: float,
    g: float = 9.81,
) -> GainCertificate:
    """Assemble the full gain certificate for a scenario.

    All preconditions are evaluated and recorded as pass/fail entries;
    nothing raises on a failed condition.
    """
    k_x = position.k_x
    k_v = position.k_v
    passes: dict[str, bool] = {}
    notes: list[str] = []

    try:
        roots = derive_k2(k_x, k_v)
        passes["k2_real"] = True
    except ValueError:
        roots = (math.nan, math.nan)
        passes["k2_real"] = False
        notes.append("no real k2 for these (k_x, k_v)")

    s = math.sin(theta0)
    cmax = c_bound(k_x, k_v, m, theta0)
    passes["c_positive"] = c > 0.0
    if not passes["c_positive"]:
        notes.append("c must be positive")
    passes["c_below_max"] = 0.0 < c < cmax
    if passes["c_positive"] and not passes["c_below_max"]:
        notes.append(f"c = {c} exceeds admissible bound {cmax:.6g}")

    passes["saturation_nesting"] = position.sigma1.b < position.sigma2.a / 2.0

    b2 = position.sigma2.b
    ok_b2, inf_norm = validate_b2(traj, horizon, m, g, b2)
    passes["b2_below_fd"] = ok_b2
    if not ok_b2:
        notes.append(
            f"b2 = {b2} not below the smallest feedforward max-norm {inf_norm:.6g}"
        )

    fd_sup = fd_sup_norm(traj, horizon, m, g)
    W1 = np.array([
        [c * k_x * (1.0 - s) / m, -c * k_v * (1.0 + s) / (2.0 * m)],
        [-c * k_v * (1.0 + s) / (2.0 * m), k_v * (1.0 - s) - c],
    ])
    W2 = 2.0 * np.array([
        [(c / m) * fd_sup, 0.0],
        [position.sigma1.a + fd_sup, 0.0],
    ])
    W3 = np.diag([attitude.alpha * attitude.k_q, attitude.k_omega])

    lam_min = _lambda_min_2x2(W1)
    passes["W1_positive_definite"] = lam_min > 0.0

    w2n = _spectral_norm_2x2(W2)
    lhs = min(attitude.alpha * attitude.k_q, attitude.k_omega)
    rhs = 4.0 * w2n**2 / lam_min if lam_min > 0 else math.inf
    passes["spectral_condition"] = lhs > rhs
    if not passes["spectral_condition"]:
        notes.append(
            "conservative condition not met: min(alpha k_q, k_omega) = "
            f"{lhs:.6g} <= {rhs:.6g}"
        )

    return GainCertificate(
        k_x=k_x,
        k_v=k_v,
        k1=position.k1,
        k2_roots=roots,
        theta0=theta0,
        c=c,
        c_max=cmax,
        W1=W1,
        W2=W2,
        W3=W3,
        lambda_min_W1=lam_min,
        W2_norm=w2n,
        condition_lhs=lhs,
        condition_rhs=rhs,
        beta=min(attitude.k_q / 2.0, attitude.k_omega),
        fd_sup=fd_sup,
        fd_inf_max_norm=float(inf_norm),
        b2=b2,
        passes=passes,
        notes=notes,
    )


def check_initial_condition(
    state0: RigidBodyState, cmd0: AttitudeCommand, gains: AttitudeGains
) -> tuple[bool, float]:
    """Basin test at the initial state, given the initial attitude command."""
    q0 = state0.R[:, 2].copy()
    psi0 = attitude_error(q0, cmd0.q_d)
    omega_d0 = desired_omega(state0.R, cmd0.q_d, cmd0.q_d_rate, gains.k_q)
    e_omega0 = state0.Omega[:2] - omega_d0
    return basin_check(e_omega0, psi0, gains.alpha)
