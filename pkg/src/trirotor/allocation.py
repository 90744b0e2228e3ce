"""Thrust allocation for the three working rotors.

The map from per-rotor thrusts to (collective, roll torque, pitch
torque) is square and exactly invertible, so allocation is a linear
solve followed by actuator clamping. The realized wrench is recomputed
from the clamped thrusts, so the simulation feels the actuation error
whenever a limit is hit. The yaw moment is whatever the rotor drag
model yields; it is not allocated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from trirotor.plant import RotorParams, RotorSet, Wrench, _rotor_thrust_and_drag, _wrench_from_rotors


@dataclass
class AllocationResult:
    """Clamped rotor commands plus the wrench they actually produce."""

    rotors: RotorSet
    saturated: np.ndarray
    realized_wrench: Wrench

    def __post_init__(self):
        self.saturated = np.asarray(self.saturated, dtype=bool).reshape(3)


@njit(cache=True, nogil=True)
def _solve_thrusts(f, M1, M2, arm):
    T1 = 0.5 * (f + M1 / arm)
    T2 = (M2 - M1) / (2.0 * arm)
    T3 = f - T1 - T2
    return T1, T2, T3


def solve_thrusts(f: float, M1: float, M2: float, arm: float) -> np.ndarray:
    """Per-rotor thrusts reproducing (f, M1, M2) exactly."""
    if arm <= 0:
        raise ValueError("moment arm must be positive")
    return np.array(_solve_thrusts(f, M1, M2, arm))


def pitch_commands(T: np.ndarray, rotor: RotorParams) -> np.ndarray:
    """Blade pitch angles producing thrusts ``T`` at the fixed rotor speeds."""
    w = rotor.omega_rotor
    return np.asarray(T, dtype=np.float64) / (rotor.b_L * w * w)


def clamp_thrusts(T: np.ndarray, rotor: RotorParams) -> AllocationResult:
    """Clamp thrusts to the actuator range and rebuild the delivered wrench."""
    T = np.asarray(T, dtype=np.float64).reshape(3)
    clamped = np.clip(T, rotor.thrust_min, rotor.thrust_max)
    saturated = clamped != T
    pitch = pitch_commands(clamped, rotor)
    drag = np.empty(3)
    for i in range(3):
        _, drag[i] = _rotor_thrust_and_drag(
            pitch[i], rotor.omega_rotor[i], rotor.b_L, rotor.b_D1, rotor.b_D2, rotor.b_D3
        )
    rotors = RotorSet(thrust=clamped, pitch=pitch, drag=drag)
    f, M1, M2, M3 = _wrench_from_rotors(
        clamped[0], clamped[1], clamped[2], drag[0], drag[1], drag[2], rotor.arm
    )
    return AllocationResult(
        rotors=rotors, saturated=saturated, realized_wrench=Wrench(f=f, M=np.array([M1, M2, M3]))
    )


def allocate(f: float, M1: float, M2: float, rotor: RotorParams) -> AllocationResult:
    """Full allocation pass: invert the mixing map, clamp, rebuild the wrench."""
    return clamp_thrusts(solve_thrusts(f, M1, M2, rotor.arm), rotor)
