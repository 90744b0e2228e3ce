"""Nested-saturation position controller with bounded thrust.

The translational loop produces a commanded thrust *vector* whose norm
stays bounded away from zero (so the commanded pointing direction is
always well defined), the pointing command and its rate, and the scalar
collective thrust obtained by projecting the vector onto the actual
thrust axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import warnings

import numpy as np
from numba import njit

from trirotor.plant import RigidBodyState
from trirotor.reference import TrajectorySample

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class SaturationSpec:
    """Smooth linear saturation: identity on [-a, a], bounded by b.

    Between ``a`` and ``s_b`` the output follows a quintic blend that is
    C^2, monotone, and reaches the bound ``b`` with zero slope and
    curvature; beyond ``s_b`` it is exactly ``b``. The function is odd.
    """

    a: float
    b: float
    s_b: float | None = None

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError("need 0 < a < b")
        if self.s_b is None:
            object.__setattr__(self, "s_b", self.a + 2.0 * (self.b - self.a))
        if self.s_b <= self.a:
            raise ValueError("blend end s_b must exceed a")
        # the quintic blend is monotone only for moderate blend lengths;
        # reject specs where it would overshoot or fold back
        u = np.linspace(0.0, 1.0, 1001)
        dh = _blend_slope(u, (self.s_b - self.a) / (self.b - self.a))
        if np.any(dh < -1e-12):
            raise ValueError("saturation blend not monotone for this (a, b, s_b)")


def _blend_slope(u: np.ndarray, p: float) -> np.ndarray:
    # d/du of the normalized blend with h(0)=0, h'(0)=p, h''(0)=0,
    # h(1)=1, h'(1)=0, h''(1)=0
    c3 = 10.0 - 6.0 * p
    c4 = 8.0 * p - 15.0
    c5 = 6.0 - 3.0 * p
    return p + 3.0 * c3 * u**2 + 4.0 * c4 * u**3 + 5.0 * c5 * u**4


@njit(cache=True, nogil=True)
def _sat(s, a, b, s_b):
    x = abs(s)
    if x <= a:
        return s
    sign = 1.0 if s > 0.0 else -1.0
    if x >= s_b:
        return sign * b
    L = s_b - a
    d = b - a
    p = L / d
    u = (x - a) / L
    c3 = 10.0 - 6.0 * p
    c4 = 8.0 * p - 15.0
    c5 = 6.0 - 3.0 * p
    h = p * u + c3 * u**3 + c4 * u**4 + c5 * u**5
    return sign * (a + d * h)


@njit(cache=True, nogil=True)
def _sat_deriv(s, a, b, s_b):
    x = abs(s)
    if x <= a:
        return 1.0
    if x >= s_b:
        return 0.0
    L = s_b - a
    d = b - a
    p = L / d
    u = (x - a) / L
    c3 = 10.0 - 6.0 * p
    c4 = 8.0 * p - 15.0
    c5 = 6.0 - 3.0 * p
    dh = p + 3.0 * c3 * u**2 + 4.0 * c4 * u**3 + 5.0 * c5 * u**4
    return dh * d / L


@dataclass
class PositionGains:
    """Gains and saturation limits of the translational loop.

    ``k1``/``k2`` are the raw loop gains; the equivalent linear-region
    stiffness and damping are ``k_x = k1`` and ``k_v = k1/k2 + k2``.
    The inner limit must satisfy ``b1 < a2 / 2`` for the nesting
    argument to hold.
    """

    k1: float = 2.0
    k2: float = 2.0
    sigma1: SaturationSpec = field(default_factory=lambda: SaturationSpec(a=2.0, b=3.5))
    sigma2: SaturationSpec = field(default_factory=lambda: SaturationSpec(a=8.0, b=9.0))
    f_floor: float = 0.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1, k2 must be positive")
        if not self.sigma1.b < self.sigma2.a / 2.0:
            raise ValueError("need b1 < a2/2 for nested saturation")
        if self.f_floor <= 0:
            raise ValueError("f_floor must be positive")

    @property
    def k_x(self) -> float:
        return self.k1

    @property
    def k_v(self) -> float:
        return self.k1 / self.k2 + self.k2


@dataclass
class TranslationalErrors:
    e_x: np.ndarray
    e_v: np.ndarray

    def __post_init__(self):
        self.e_x = np.asarray(self.e_x, dtype=np.float64).reshape(3)
        self.e_v = np.asarray(self.e_v, dtype=np.float64).reshape(3)


@dataclass
class ThrustCommand:
    """Everything the attitude loop and the allocator need from the position loop."""

    f_hat: np.ndarray
    f_d: np.ndarray
    q_d: np.ndarray
    q_d_rate: np.ndarray
    f: float


# ---------------------------------------------------------------------------
# njit kernels

@njit(cache=True, nogil=True)
def _sigma_bar(e_x, e_v, m, k1, k2, a1, b1, sb1, a2, b2, sb2):
    out = np.empty(3)
    for i in range(3):
        inner = k2 * m * e_v[i] + k1 * e_x[i]
        outer = (k1 / k2) * e_v[i] + _sat(inner, a1, b1, sb1)
        out[i] = -_sat(outer, a2, b2, sb2)
    return out


@njit(cache=True, nogil=True)
def _sigma_bar_args(e_x, e_v, m, k1, k2, a1, b1, sb1):
    """Inner and outer saturation arguments (for logging / analysis)."""
    inner = np.empty(3)
    outer = np.empty(3)
    for i in range(3):
        inner[i] = k2 * m * e_v[i] + k1 * e_x[i]
        outer[i] = (k1 / k2) * e_v[i] + _sat(inner[i], a1, b1, sb1)
    return inner, outer


@njit(cache=True, nogil=True)
def _sigma_bar_rate(e_x, e_v, de_x, de_v, m, k1, k2, a1, b1, sb1, a2, b2, sb2):
    out = np.empty(3)
    for i in range(3):
        inner = k2 * m * e_v[i] + k1 * e_x[i]
        d_inner = k2 * m * de_v[i] + k1 * de_x[i]
        outer = (k1 / k2) * e_v[i] + _sat(inner, a1, b1, sb1)
        d_outer = (k1 / k2) * de_v[i] + _sat_deriv(inner, a1, b1, sb1) * d_inner
        out[i] = -_sat_deriv(outer, a2, b2, sb2) * d_outer
    return out


# ---------------------------------------------------------------------------
# public operations

def smooth_sat(s: float, spec: SaturationSpec) -> float:
    """Evaluate the smooth saturation at ``s``."""
    return _sat(s, spec.a, spec.b, spec.s_b)


def smooth_sat_deriv(s: float, spec: SaturationSpec) -> float:
    """Analytic derivative of :func:`smooth_sat` (polynomial inside the blend)."""
    return _sat_deriv(s, spec.a, spec.b, spec.s_b)


def sigma_bar(err: TranslationalErrors, m: float, gains: PositionGains) -> np.ndarray:
    """Componentwise nested-saturation feedback; bounded by ``b2`` in max norm."""
    return _sigma_bar(
        err.e_x, err.e_v, m,
        gains.k1, gains.k2,
        gains.sigma1.a, gains.sigma1.b, gains.sigma1.s_b,
        gains.sigma2.a, gains.sigma2.b, gains.sigma2.s_b,
    )


def commanded_thrust_vector(
    err: TranslationalErrors,
    x_dd_ref: np.ndarray,
    m: float,
    g: float,
    gains: PositionGains,
) -> tuple[np.ndarray, np.ndarray]:
    """Bounded thrust-vector command ``f_hat`` and its feedforward part ``f_d``."""
    f_d = m * np.asarray(x_dd_ref, dtype=np.float64) + m * g * _E3
    f_hat = sigma_bar(err, m, gains) + f_d
    if np.linalg.norm(f_hat) < gains.f_floor:
        warnings.warn(
            "thrust-vector command near zero; saturation limit b2 is too large "
            "for this trajectory",
            RuntimeWarning,
            stacklevel=2,
        )
    return f_hat, f_d


def commanded_reduced_attitude(f_hat: np.ndarray, f_floor: float = 0.5) -> np.ndarray:
    """Pointing command: direction of the thrust-vector command."""
    n = float(np.linalg.norm(f_hat))
    if n < f_floor:
        raise ValueError("thrust command degenerate")
    return np.asarray(f_hat, dtype=np.float64) / n


def qd_rate(f_hat: np.ndarray, f_hat_rate: np.ndarray, f_floor: float = 0.5) -> np.ndarray:
    """Rate of the pointing command: projected rate of the thrust vector."""
    n = float(np.linalg.norm(f_hat))
    if n < f_floor:
        raise ValueError("thrust command degenerate")
    q_d = np.asarray(f_hat, dtype=np.float64) / n
    rate = np.asarray(f_hat_rate, dtype=np.float64)
    return (rate - q_d * float(np.dot(q_d, rate))) / n


def collective_thrust(f_hat: np.ndarray, R: np.ndarray) -> float:
    """Scalar thrust: projection of the vector command onto the body thrust axis.

    May come out negative when the vehicle points away from the command;
    whether that is deliverable is the allocation layer's concern.
    """
    R = np.asarray(R, dtype=np.float64)
    return float(np.dot(np.asarray(f_hat, dtype=np.float64), R[:, 2]))


def position_command(
    state: RigidBodyState,
    sample: TrajectorySample,
    m: float,
    g: float,
    gains: PositionGains,
) -> ThrustCommand:
    """One full pass of the translational loop at the current state.

    The rate of the thrust-vector command is obtained by the chain rule
    through the saturations, modelling the velocity-error slope with the
    collective thrust that is about to be applied.
    """
    e_x = state.x - sample.x_d
    e_v = state.v - sample.v_d
    err = TranslationalErrors(e_x=e_x, e_v=e_v)
    f_hat, f_d = commanded_thrust_vector(err, sample.a_d, m, g, gains)
    q_d = commanded_reduced_attitude(f_hat, gains.f_floor)
    f = collective_thrust(f_hat, state.R)
    de_v = (f / m) * state.R[:, 2] - g * _E3 - sample.a_d
    d_sigma = _sigma_bar_rate(
        e_x, e_v, e_v, de_v, m,
        gains.k1, gains.k2,
        gains.sigma1.a, gains.sigma1.b, gains.sigma1.s_b,
        gains.sigma2.a, gains.sigma2.b, gains.sigma2.s_b,
    )
    f_hat_rate = d_sigma + m * sample.j_d
    rate = qd_rate(f_hat, f_hat_rate, gains.f_floor)
    return ThrustCommand(f_hat=f_hat, f_d=f_d, q_d=q_d, q_d_rate=rate, f=f)
