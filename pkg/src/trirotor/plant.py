"""Nonlinear quadrotor plant: rigid-body dynamics, rotor model, disturbance torques.

The vehicle flies on rotors 1-3; the fourth rotor is disabled for the
whole simulation and contributes neither thrust nor drag torque. Rotors
1 and 2 spin clockwise, rotor 3 anti-clockwise, which fixes the signs in
the gyroscopic moment and the yaw drag sum.

The plant always uses the *true* inertial parameters. The controller is
given a separate nominal diagonal inertia, so model mismatch is part of
the closed-loop setup by design.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from trirotor.geometry import hat

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass
class RigidBodyState:
    """Position, velocity, attitude and body angular velocity."""

    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    Omega: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).reshape(3)
        self.v = np.asarray(self.v, dtype=np.float64).reshape(3)
        self.R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        self.Omega = np.asarray(self.Omega, dtype=np.float64).reshape(3)

    @classmethod
    def at_rest(cls, x=(0.0, 0.0, 0.0)) -> "RigidBodyState":
        return cls(np.asarray(x, dtype=np.float64), np.zeros(3), np.eye(3), np.zeros(3))

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(self.x.copy(), self.v.copy(), self.R.copy(), self.Omega.copy())


@dataclass
class InertialParams:
    """True mass/inertia properties plus the controller's nominal inertia.

    ``J`` is the full (possibly non-diagonal) inertia used by the plant;
    ``J_nominal`` is the diagonal the controller designs against.
    ``K_d`` is the positive-definite rotational drag matrix and ``J_r``
    the spin inertia of a single rotor.
    """

    m: float = 1.0
    J: np.ndarray = field(default_factory=lambda: np.diag([0.081, 0.0812, 0.1320]))
    J_nominal: np.ndarray = field(default_factory=lambda: np.array([0.081, 0.0812, 0.1320]))
    J_r: float = 5.0e-5
    K_d: np.ndarray = field(default_factory=lambda: np.diag([0.7e-4, 0.7e-4, 1.4e-4]))
    g: float = 9.81

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=np.float64).reshape(3, 3)
        self.J_nominal = np.asarray(self.J_nominal, dtype=np.float64).reshape(3)
        self.K_d = np.asarray(self.K_d, dtype=np.float64)
        if self.K_d.ndim == 1:
            self.K_d = np.diag(self.K_d)
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if not np.allclose(self.J, self.J.T, atol=1e-12):
            raise ValueError("inertia matrix must be symmetric")
        if np.any(np.linalg.eigvalsh(self.J) <= 0):
            raise ValueError("inertia matrix must be positive-definite")
        if not np.allclose(self.K_d, self.K_d.T, atol=1e-12):
            raise ValueError("drag matrix must be symmetric")
        # the drag matrix is positive-definite for a physical vehicle;
        # zero is allowed so the exact-model variant can disable drag
        if np.any(np.linalg.eigvalsh(self.K_d) < 0):
            raise ValueError("drag matrix must not have negative eigenvalues")


@dataclass
class RotorParams:
    """Geometry and aerodynamic coefficients of the three working rotors.

    ``mode`` selects the actuator class: ``variable_pitch`` rotors may
    produce negative thrust, ``conventional`` rotors are limited to
    strictly positive thrust. Rotor speeds are held constant in flight;
    thrust is set through the collective blade pitch angle.
    """

    arm: float = 0.17
    omega_rotor: np.ndarray = field(default_factory=lambda: np.array([600.0, 600.0, 600.0]))
    b_L: float = 3.2e-6
    # drag-torque coefficients: not measured values, chosen at plausible
    # magnitudes; they only drive the unregulated yaw moment
    b_D1: float = 1.1e-9
    b_D2: float = 1.3e-9
    b_D3: float = 6.0e-8
    thrust_min: float = -40.0
    thrust_max: float = 40.0
    mode: str = "variable_pitch"

    def __post_init__(self):
        self.omega_rotor = np.asarray(self.omega_rotor, dtype=np.float64).reshape(3)
        if self.arm <= 0:
            raise ValueError("moment arm must be positive")
        if np.any(self.omega_rotor <= 0):
            raise ValueError("rotor speeds must be positive")
        if self.thrust_min >= self.thrust_max:
            raise ValueError("thrust_min must be below thrust_max")
        if self.mode not in ("variable_pitch", "conventional"):
            raise ValueError(f"unknown rotor mode: {self.mode!r}")
        if self.mode == "conventional" and self.thrust_min < 0:
            raise ValueError("conventional mode requires thrust_min >= 0")

    @property
    def spin_sum(self) -> float:
        """Signed rotor-speed sum entering the gyroscopic moment (cw, cw, ccw)."""
        w = self.omega_rotor
        return float(w[0] - w[1] + w[2])


@dataclass
class RotorSet:
    """Per-rotor thrusts (N), blade pitch angles (rad) and drag torques (N m)."""

    thrust: np.ndarray
    pitch: np.ndarray
    drag: np.ndarray

    def __post_init__(self):
        self.thrust = np.asarray(self.thrust, dtype=np.float64).reshape(3)
        self.pitch = np.asarray(self.pitch, dtype=np.float64).reshape(3)
        self.drag = np.asarray(self.drag, dtype=np.float64).reshape(3)


@dataclass
class Wrench:
    """Collective thrust along the body z axis and body torque."""

    f: float
    M: np.ndarray

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=np.float64).reshape(3)


# ---------------------------------------------------------------------------
# njit kernels (shared by the public wrappers and the simulation loop)

@njit(cache=True, nogil=True)
def _gyroscopic_moment(Omega, J_r, spin_sum):
    # J_r * (Omega x e3) * (w1 - w2 + w3)
    s = J_r * spin_sum
    return np.array([Omega[1] * s, -Omega[0] * s, 0.0])


@njit(cache=True, nogil=True)
def _drag_torque(Omega, K_d):
    n = np.sqrt(Omega[0] ** 2 + Omega[1] ** 2 + Omega[2] ** 2)
    return n * (K_d @ Omega)


@njit(cache=True, nogil=True)
def _rotor_thrust_and_drag(gamma, omega, b_L, b_D1, b_D2, b_D3):
    T = b_L * omega * omega * gamma
    D = b_D1 * omega * omega + b_D2 * omega * omega * gamma * gamma + b_D3 * omega * gamma
    return T, D


@njit(cache=True, nogil=True)
def _wrench_from_rotors(T1, T2, T3, D1, D2, D3, arm):
    f = T1 + T2 + T3
    M1 = arm * (T1 - T2 - T3)
    M2 = arm * (T1 + T2 - T3)
    M3 = D1 - D2 + D3
    return f, M1, M2, M3


@njit(cache=True, nogil=True)
def _accel(R, f, m, g):
    inv_m = f / m
    return np.array([inv_m * R[0, 2], inv_m * R[1, 2], inv_m * R[2, 2] - g])


@njit(cache=True, nogil=True)
def _omega_dot(Omega, M, J, J_inv, J_r_spin, K_d):
    # J dW = (J W) x W + g_r - tau_d + M, solved with the precomputed inverse
    JW = J @ Omega
    rhs = np.empty(3)
    rhs[0] = JW[1] * Omega[2] - JW[2] * Omega[1] + Omega[1] * J_r_spin + M[0]
    rhs[1] = JW[2] * Omega[0] - JW[0] * Omega[2] - Omega[0] * J_r_spin + M[1]
    rhs[2] = JW[0] * Omega[1] - JW[1] * Omega[0] + M[2]
    n = np.sqrt(Omega[0] ** 2 + Omega[1] ** 2 + Omega[2] ** 2)
    if n > 0.0:
        Kw = K_d @ Omega
        rhs[0] -= n * Kw[0]
        rhs[1] -= n * Kw[1]
        rhs[2] -= n * Kw[2]
    return J_inv @ rhs


# ---------------------------------------------------------------------------
# public wrappers

def gyroscopic_moment(Omega: np.ndarray, rotor: RotorParams, J_r: float) -> np.ndarray:
    """Propeller gyroscopic moment from the signed rotor-speed sum."""
    return _gyroscopic_moment(np.asarray(Omega, dtype=np.float64), J_r, rotor.spin_sum)


def drag_torque(Omega: np.ndarray, K_d: np.ndarray) -> np.ndarray:
    """Aerodynamic rotational drag, quadratic in the angular velocity."""
    return _drag_torque(np.asarray(Omega, dtype=np.float64), np.asarray(K_d, dtype=np.float64))


def rotor_thrust_and_drag(gamma: float, omega: float, rotor: RotorParams) -> tuple[float, float]:
    """Thrust and drag torque of one rotor at blade pitch ``gamma`` and speed ``omega``."""
    if omega <= 0:
        raise ValueError("rotor speed must be positive")
    return _rotor_thrust_and_drag(gamma, omega, rotor.b_L, rotor.b_D1, rotor.b_D2, rotor.b_D3)


def wrench_from_rotors(rotors: RotorSet, arm: float) -> Wrench:
    """Map per-rotor thrusts and drags to collective thrust and body torque."""
    T, D = rotors.thrust, rotors.drag
    f, M1, M2, M3 = _wrench_from_rotors(T[0], T[1], T[2], D[0], D[1], D[2], arm)
    return Wrench(f=f, M=np.array([M1, M2, M3]))


def state_derivative(
    s: RigidBodyState, w: Wrench, p: InertialParams, rotor: RotorParams
) -> RigidBodyState:
    """Time derivative of the rigid-body state under wrench ``w``.

    Returns a ``RigidBodyState`` whose fields hold (dx, dv, dR, dOmega).
    The gyroscopic moment and drag torque are evaluated with the true
    ``J_r`` and ``K_d``, not the controller's nominal values.
    """
    J_inv = np.linalg.inv(p.J)
    dx = s.v.copy()
    dv = _accel(s.R, w.f, p.m, p.g)
    dR = s.R @ hat(s.Omega)
    dW = _omega_dot(s.Omega, w.M, p.J, J_inv, p.J_r * rotor.spin_sum, p.K_d)
    return RigidBodyState(dx, dv, dR, dW)
