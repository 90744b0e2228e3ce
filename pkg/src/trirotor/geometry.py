"""Primitives on SO(3) and the unit sphere.

Conventions used throughout the package:

* 3-vectors are ``float64`` numpy arrays of shape ``(3,)``.
* Rotation matrices ``R`` are ``(3, 3)`` with columns equal to the body
  axes expressed in the inertial frame, so the body thrust axis is
  ``q = R @ e3 = R[:, 2]``.
* Unit vectors (points on the sphere) are plain arrays normalized via
  :func:`normalize`; tangent vectors at ``q`` are arrays orthogonal to
  ``q``.

The attitude error function here is the "square-root" error on the
sphere: smooth, zero iff aligned, equal to 2 at the antipode, and with a
gradient that does not vanish as the antipode is approached.
"""

from __future__ import annotations

import numpy as np
from numba import njit

#: below this dot-product margin from -1, the error gradient is treated
#: as undefined (the antipode itself is a measure-zero singularity)
EPS_ANTIPODAL = 1e-9

#: rotation-vector norm below which exp_so3 switches to its series form
EPS_ROTVEC = 1e-8

_E3 = np.array([0.0, 0.0, 1.0])


def normalize(v: np.ndarray) -> np.ndarray:
    """Return ``v / ||v||``; raises for near-zero input."""
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero vector")
    return np.asarray(v, dtype=np.float64) / n


@njit(cache=True, nogil=True)
def hat(v):
    """Skew matrix of ``v`` such that ``hat(v) @ w == cross(v, w)``."""
    out = np.zeros((3, 3))
    out[0, 1] = -v[2]
    out[0, 2] = v[1]
    out[1, 0] = v[2]
    out[1, 2] = -v[0]
    out[2, 0] = -v[1]
    out[2, 1] = v[0]
    return out


@njit(cache=True, nogil=True)
def vee(S, tol_skew=1e-9):
    """Inverse of :func:`hat`. Rejects matrices that are not skew."""
    defect = 0.0
    for i in range(3):
        for j in range(3):
            d = S[i, j] + S[j, i]
            defect += d * d
    if np.sqrt(defect) > tol_skew:
        raise ValueError("not skew-symmetric")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


@njit(cache=True, nogil=True)
def exp_so3(v):
    """Rodrigues rotation matrix for the rotation vector ``v`` (rad).

    For very small angles a second-order series is used so that the
    sin/angle coefficients stay well conditioned.
    """
    a = np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    K = hat(v)
    K2 = K @ K
    if a < EPS_ROTVEC:
        c1 = 1.0
        c2 = 0.5
    else:
        c1 = np.sin(a) / a
        c2 = (1.0 - np.cos(a)) / (a * a)
    out = c1 * K + c2 * K2
    out[0, 0] += 1.0
    out[1, 1] += 1.0
    out[2, 2] += 1.0
    return out


@njit(cache=True, nogil=True)
def _cross(a, b):
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


@njit(cache=True, nogil=True)
def attitude_error(q, q_d):
    """Error between pointing directions, in [0, 2].

    Zero iff ``q == q_d``; equals ``2 - sqrt(2) * sqrt(1 + <q_d, q>)``,
    i.e. ``2 (1 - cos(theta/2))`` for tilt angle theta. Well defined
    everywhere, including the antipode.
    """
    c = q[0] * q_d[0] + q[1] * q_d[1] + q[2] * q_d[2]
    s = 1.0 + c
    if s < 0.0:
        s = 0.0
    return 2.0 - np.sqrt(2.0) * np.sqrt(s)


@njit(cache=True, nogil=True)
def attitude_error_grad(q, q_d, eps_antipodal=EPS_ANTIPODAL):
    """Gradient of :func:`attitude_error` in its first slot.

    Tangent to ``q``; its norm is ``sin(theta/2)``. Undefined at the
    antipode, where a hard error beats a silent blow-up.
    """
    c = q[0] * q_d[0] + q[1] * q_d[1] + q[2] * q_d[2]
    if c <= -1.0 + eps_antipodal:
        raise ValueError("error differential undefined at antipode")
    num = _cross(q, _cross(q, q_d))
    return num / (np.sqrt(2.0) * np.sqrt(1.0 + c))


@njit(cache=True, nogil=True)
def attitude_error_grad_cmd(q, q_d, eps_antipodal=EPS_ANTIPODAL):
    """Gradient of :func:`attitude_error` in its second slot (tangent at q_d)."""
    c = q[0] * q_d[0] + q[1] * q_d[1] + q[2] * q_d[2]
    if c <= -1.0 + eps_antipodal:
        raise ValueError("error differential undefined at antipode")
    num = _cross(q_d, _cross(q_d, q))
    return num / (np.sqrt(2.0) * np.sqrt(1.0 + c))


@njit(cache=True, nogil=True)
def mollified_error(q, q_d):
    """Alternative smooth error ``1 - <q_d, q>`` (gradient continuous at the antipode).

    Exposed as a configuration variant only; the tracking guarantees of
    the default error function do not carry over.
    """
    return 1.0 - (q[0] * q_d[0] + q[1] * q_d[1] + q[2] * q_d[2])


@njit(cache=True, nogil=True)
def mollified_error_grad(q, q_d):
    """First-slot gradient of :func:`mollified_error`, tangent to ``q``."""
    return _cross(q, _cross(q, q_d))


@njit(cache=True, nogil=True)
def transport(q_d, v, q, tol_tangent=1e-9):
    """Carry a tangent vector ``v`` at ``q_d`` to the tangent space at ``q``.

    Defined as ``(q_d x v) x q``. Reduces to the identity when
    ``q == q_d``. ``v`` must lie in the tangent space at ``q_d``.
    """
    if abs(v[0] * q_d[0] + v[1] * q_d[1] + v[2] * q_d[2]) > tol_tangent * max(
        1.0, np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    ):
        raise ValueError("vector not in tangent space")
    return _cross(_cross(q_d, v), q)


@njit(cache=True, nogil=True)
def rotation_defect(R):
    """Frobenius norm of ``R^T R - I`` (orthonormality drift measure)."""
    acc = 0.0
    for i in range(3):
        for j in range(3):
            g = R[0, i] * R[0, j] + R[1, i] * R[1, j] + R[2, i] * R[2, j]
            if i == j:
                g -= 1.0
            acc += g * g
    return np.sqrt(acc)


@njit(cache=True, nogil=True)
def orthonormalize(R):
    """Re-orthonormalize a drifted rotation matrix (Gram-Schmidt on columns)."""
    out = np.empty((3, 3))
    n0 = np.sqrt(R[0, 0] ** 2 + R[1, 0] ** 2 + R[2, 0] ** 2)
    for i in range(3):
        out[i, 0] = R[i, 0] / n0
    d = out[0, 0] * R[0, 1] + out[1, 0] * R[1, 1] + out[2, 0] * R[2, 1]
    c1 = np.empty(3)
    for i in range(3):
        c1[i] = R[i, 1] - d * out[i, 0]
    n1 = np.sqrt(c1[0] ** 2 + c1[1] ** 2 + c1[2] ** 2)
    for i in range(3):
        out[i, 1] = c1[i] / n1
    out[0, 2] = out[1, 0] * out[2, 1] - out[2, 0] * out[1, 1]
    out[1, 2] = out[2, 0] * out[0, 1] - out[0, 0] * out[2, 1]
    out[2, 2] = out[0, 0] * out[1, 1] - out[1, 0] * out[0, 1]
    return out


def is_rotation(R: np.ndarray, tol: float = 1e-9) -> bool:
    """True if ``R`` is orthonormal with determinant one, within ``tol``."""
    return rotation_defect(R) <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def rotation_about(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    """Rotation by ``angle_rad`` about ``axis`` (normalized internally)."""
    return exp_so3(normalize(np.asarray(axis, dtype=np.float64)) * angle_rad)


def tilt_angle(q: np.ndarray, q_d: np.ndarray) -> float:
    """Angle between two unit vectors, in radians, robust near 0 and pi."""
    return float(np.arctan2(np.linalg.norm(np.cross(q, q_d)), float(np.dot(q, q_d))))
