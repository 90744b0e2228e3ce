"""Reduced-attitude backstepping controller on the sphere.

Control of the spin rate about the body thrust axis is relinquished; the
controller steers the thrust axis ``q = R e3`` toward a commanded
direction ``q_d(t)`` using only the two torques about the horizontal
body axes, expressed in nominal-inertia units ``U = [M1/J1, M2/J2]``.

Sign convention. With ``Rdot = R hat(Omega)`` the thrust axis moves as
``qdot = Omega_2 r1 - Omega_1 r2`` (``r1 = R e1``, ``r2 = R e2``), so a
tangent target ``w`` for ``qdot`` is realized by the body rates
``Omega_d = [-<r2, w>, <r1, w>]`` and the error-function gradient enters
the torque law through the same adjoint projection. All quantities here
(body rates, torques) are in this standard convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from trirotor.geometry import (
    EPS_ANTIPODAL,
    attitude_error,
    attitude_error_grad,
    mollified_error,
    mollified_error_grad,
    tilt_angle,
    transport,
)
from trirotor.plant import RigidBodyState


@dataclass
class AttitudeGains:
    """Attitude-loop gains and the robustification knobs.

    ``delta`` bounds the lumped gyroscopic/drag disturbance per unit of
    ``(|W| + |W|^2)``; ``tol`` sets the width of the linear region of the
    robustifying term (a slew-rate-friendly sign surrogate).
    """

    k_q: float = 8.0
    k_omega: float = 10.0
    alpha: float = 60.0
    delta: float = 3.0e-3
    tol: float = 1.0e-3
    rate_filter_cutoff: float = 100.0

    def __post_init__(self):
        if self.k_q <= 0 or self.k_omega <= 0 or self.alpha <= 0:
            raise ValueError("k_q, k_omega, alpha must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class AttitudeCommand:
    """Commanded pointing direction, its rate, and the rate targets."""

    q_d: np.ndarray
    q_d_rate: np.ndarray
    omega_d: np.ndarray = field(default_factory=lambda: np.zeros(2))
    omega_d_rate: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.q_d = np.asarray(self.q_d, dtype=np.float64).reshape(3)
        self.q_d_rate = np.asarray(self.q_d_rate, dtype=np.float64).reshape(3)
        self.omega_d = np.asarray(self.omega_d, dtype=np.float64).reshape(2)
        self.omega_d_rate = np.asarray(self.omega_d_rate, dtype=np.float64).reshape(2)
        if abs(float(np.dot(self.q_d, self.q_d_rate))) > 1e-9 * max(
            1.0, float(np.linalg.norm(self.q_d_rate))
        ):
            raise ValueError("q_d_rate must be tangent to q_d")


@dataclass
class AttitudeErrors:
    """Attitude tracking errors: error value, gradient, rate error, tilt angle."""

    psi: float
    e_q: np.ndarray
    e_omega: np.ndarray
    tilt: float


@dataclass
class TorqueCommand:
    """Two-axis torque command in nominal-inertia units (rad/s^2)."""

    U: np.ndarray

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=np.float64).reshape(2)


# ---------------------------------------------------------------------------
# njit kernels

@njit(cache=True, nogil=True)
def _tangent_to_rates(R, w):
    """Body-rate pair realizing tangent velocity ``w`` of the thrust axis."""
    r1w = R[0, 0] * w[0] + R[1, 0] * w[1] + R[2, 0] * w[2]
    r2w = R[0, 1] * w[0] + R[1, 1] * w[1] + R[2, 1] * w[2]
    return np.array([-r2w, r1w])


@njit(cache=True, nogil=True)
def _u_delta(e_omega, tol):
    n = np.sqrt(e_omega[0] ** 2 + e_omega[1] ** 2)
    if n > tol:
        return e_omega / n
    return e_omega / tol


@njit(cache=True, nogil=True)
def _f_j(Omega, J_nom):
    return np.array([
        (J_nom[1] - J_nom[2]) / J_nom[0] * Omega[1] * Omega[2],
        (J_nom[2] - J_nom[0]) / J_nom[1] * Omega[0] * Omega[2],
    ])


@njit(cache=True, nogil=True)
def _torque_law(R, Omega, e_q, e_omega, omega_d_rate, J_nom, alpha, k_omega, delta, tol):
    grad_rates = _tangent_to_rates(R, e_q)
    fj = _f_j(Omega, J_nom)
    ud = _u_delta(e_omega, tol)
    w_t = np.sqrt(Omega[0] ** 2 + Omega[1] ** 2)
    rob = (w_t + w_t * w_t) * delta
    return (
        -alpha * grad_rates
        - k_omega * e_omega
        - fj
        + omega_d_rate
        - ud * rob
    )


# ---------------------------------------------------------------------------
# public operations

def desired_omega(
    R: np.ndarray,
    q_d: np.ndarray,
    q_d_rate: np.ndarray,
    k_q: float,
    mollified: bool = False,
) -> np.ndarray:
    """Backstepping angular-velocity target for the two horizontal axes.

    Solves ``qdot = transport(q_d -> q) q_d_rate - k_q grad`` for the
    body-rate pair. Raises near the antipode, where the gradient of the
    default error function is undefined.
    """
    R = np.asarray(R, dtype=np.float64)
    q = R[:, 2].copy()
    q_d = np.asarray(q_d, dtype=np.float64)
    grad = (
        mollified_error_grad(q, q_d) if mollified else attitude_error_grad(q, q_d)
    )
    w = transport(q_d, np.asarray(q_d_rate, dtype=np.float64), q) - k_q * grad
    return _tangent_to_rates(R, w)


def u_delta(e_omega: np.ndarray, tol: float) -> np.ndarray:
    """Bounded robustifying direction: unit vector outside ``tol``, linear inside."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _u_delta(np.asarray(e_omega, dtype=np.float64), tol)


def f_j(Omega: np.ndarray, J_nominal: np.ndarray) -> np.ndarray:
    """Nominal Euler cross-coupling felt by the two horizontal rate channels."""
    return _f_j(
        np.asarray(Omega, dtype=np.float64), np.asarray(J_nominal, dtype=np.float64)
    )


def attitude_errors(
    state: RigidBodyState, cmd: AttitudeCommand, mollified: bool = False
) -> AttitudeErrors:
    """Tracking errors of the attitude loop for the given state and command."""
    q = state.R[:, 2].copy()
    if mollified:
        psi = mollified_error(q, cmd.q_d)
        e_q = mollified_error_grad(q, cmd.q_d)
    else:
        psi = attitude_error(q, cmd.q_d)
        e_q = attitude_error_grad(q, cmd.q_d)
    e_omega = state.Omega[:2] - cmd.omega_d
    return AttitudeErrors(psi=psi, e_q=e_q, e_omega=e_omega, tilt=tilt_angle(q, cmd.q_d))


def attitude_torque(
    state: RigidBodyState,
    cmd: AttitudeCommand,
    gains: AttitudeGains,
    J_nominal: np.ndarray,
    mollified: bool = False,
) -> TorqueCommand:
    """Torque law of the reduced-attitude tracking controller.

    Combines the error-gradient term, rate-error damping, cancellation
    of the nominal Euler coupling, the feedforward rate-target slope and
    the bounded robustifying term.
    """
    q = state.R[:, 2].copy()
    e_q = (
        mollified_error_grad(q, cmd.q_d) if mollified else attitude_error_grad(q, cmd.q_d)
    )
    e_omega = state.Omega[:2] - cmd.omega_d
    U = _torque_law(
        state.R,
        state.Omega,
        e_q,
        e_omega,
        cmd.omega_d_rate,
        np.asarray(J_nominal, dtype=np.float64),
        gains.alpha,
        gains.k_omega,
        gains.delta,
        gains.tol,
    )
    return TorqueCommand(U=U)


def basin_check(e_omega0: np.ndarray, psi0: float, alpha: float) -> tuple[bool, float]:
    """Initial-condition test for guaranteed sublevel-set invariance.

    Returns ``(ok, margin)`` where ``margin = 2 alpha (2 - psi0) - |e_omega0|``;
    the guarantee requires a strictly positive margin.
    """
    if not 0.0 <= psi0 <= 2.0:
        raise ValueError("psi0 must lie in [0, 2]")
    bound = 2.0 * alpha * (2.0 - psi0)
    n = float(np.linalg.norm(e_omega0))
    return n < bound, bound - n


class RateEstimator:
    """Causal estimate of the rate-target slope.

    Backward difference of successive rate targets passed through a
    single-pole low-pass filter (unity DC gain). The first sample yields
    zero. ``cutoff`` in rad/s; ``None`` or ``inf`` disables the filter,
    leaving the raw difference quotient.
    """

    def __init__(self, dt: float, cutoff: float | None = 100.0):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.dt = dt
        if cutoff is None or math.isinf(cutoff):
            self.blend = 1.0
        elif cutoff <= 0:
            raise ValueError("cutoff must be positive")
        else:
            self.blend = 1.0 - math.exp(-cutoff * dt)
        self._prev: np.ndarray | None = None
        self._est = np.zeros(2)

    def reset(self) -> None:
        self._prev = None
        self._est = np.zeros(2)

    def update(self, omega_d: np.ndarray) -> np.ndarray:
        omega_d = np.asarray(omega_d, dtype=np.float64).reshape(2)
        if self._prev is None:
            self._prev = omega_d.copy()
            self._est = np.zeros(2)
            return self._est.copy()
        raw = (omega_d - self._prev) / self.dt
        self._prev = omega_d.copy()
        self._est = self._est + self.blend * (raw - self._est)
        return self._est.copy()
