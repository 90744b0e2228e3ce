"""Stock scenario presets.

Two desk-scale maneuvers exercise the controller end to end, both
starting from a 140-degree roll (downward-facing thrust axis) offset
from the reference path:

* ``variable_pitch`` -- 1 kg vehicle whose rotors may produce negative
  thrust; wide actuator range, so the recovery is essentially
  unconstrained.
* ``constrained_thrust`` -- 3 kg vehicle with strictly positive rotor
  thrusts and a hard per-rotor ceiling, spun up about the vertical axis
  before the maneuver. A contrast variant starts without the spin, which
  is expected to degrade or lose tracking.
"""

from __future__ import annotations

import math

import numpy as np

from trirotor.attitude import AttitudeGains
from trirotor.geometry import rotation_about
from trirotor.plant import InertialParams, RigidBodyState, RotorParams
from trirotor.position import PositionGains, SaturationSpec
from trirotor.reference import TRAJ_FIGURE_EIGHT, TRAJ_HOVER, Trajectory
from trirotor.sim import ScenarioConfig

#: full inertia matrix of the simulated airframe (controller sees only
#: the diagonal nominal values)
FULL_INERTIA = np.array([
    [0.0972, 0.0194, 0.0195],
    [0.0194, 0.0974, 0.0317],
    [0.0195, 0.0317, 0.1584],
])

NOMINAL_INERTIA = np.array([0.081, 0.0812, 0.1320])


def _inverted_start(x0=(5.0, 5.0, 5.0), omega=(0.0, 0.0, 0.0)) -> RigidBodyState:
    return RigidBodyState(
        x=np.asarray(x0, dtype=np.float64),
        v=np.zeros(3),
        R=rotation_about([1.0, 0.0, 0.0], math.radians(140.0)),
        Omega=np.asarray(omega, dtype=np.float64),
    )


def variable_pitch(duration: float = 20.0) -> ScenarioConfig:
    """Figure-eight tracking with attitude recovery, negative thrust allowed."""
    return ScenarioConfig(
        inertial=InertialParams(m=1.0, J=FULL_INERTIA.copy(), J_nominal=NOMINAL_INERTIA.copy()),
        rotor=RotorParams(mode="variable_pitch", thrust_min=-40.0, thrust_max=40.0),
        attitude_gains=AttitudeGains(),
        position_gains=PositionGains(),
        trajectory=Trajectory(kind=TRAJ_FIGURE_EIGHT, params=np.array([2.0, 2.0, 10.0])),
        initial_state=_inverted_start(),
        duration=duration,
    )


def constrained_thrust(duration: float = 30.0, spin: float = 2.0 * math.pi) -> ScenarioConfig:
    """Same maneuver on a heavier vehicle with strictly positive rotor thrust.

    Saturation limits scale with the heavier feedforward force (its
    smallest max-norm is 29.43 N here, so the outer bound can sit at
    27 N). The yaw-drag pitch-squared coefficient is set at the scale it
    would have for physically small blade-pitch angles; the vertical
    spin then decays slowly instead of being dragged upward, keeping the
    positivity-clamp wobble at the modest level the maneuver tolerates.
    """
    return ScenarioConfig(
        inertial=InertialParams(m=3.0, J=FULL_INERTIA.copy(), J_nominal=NOMINAL_INERTIA.copy()),
        rotor=RotorParams(
            mode="conventional",
            thrust_min=0.05,
            thrust_max=30.0,
            b_D2=1.3e-11,
        ),
        attitude_gains=AttitudeGains(),
        position_gains=PositionGains(
            k1=2.0,
            k2=2.0,
            sigma1=SaturationSpec(a=6.0, b=11.5),
            sigma2=SaturationSpec(a=24.0, b=27.0),
        ),
        trajectory=Trajectory(kind=TRAJ_FIGURE_EIGHT, params=np.array([2.0, 2.0, 10.0])),
        initial_state=_inverted_start(omega=(0.0, 0.0, spin)),
        duration=duration,
    )


def constrained_thrust_contrast(duration: float = 30.0) -> ScenarioConfig:
    """Constrained-thrust maneuver without the initial vertical spin.

    With a large initial attitude error and no spin, tracking is
    expected to degrade or fail; the run exists to exercise failure
    detection and reporting, not to pass a tracking bound.
    """
    return constrained_thrust(duration=duration, spin=0.0)


def hover_scenario(duration: float = 5.0, point=(0.0, 0.0, 5.0)) -> ScenarioConfig:
    """Rest-at-setpoint baseline; every error should stay at numerical zero."""
    return ScenarioConfig(
        inertial=InertialParams(m=1.0, J=FULL_INERTIA.copy(), J_nominal=NOMINAL_INERTIA.copy()),
        rotor=RotorParams(mode="variable_pitch", thrust_min=-40.0, thrust_max=40.0),
        trajectory=Trajectory(kind=TRAJ_HOVER, params=np.asarray(point, dtype=np.float64)),
        initial_state=RigidBodyState.at_rest(point),
        duration=duration,
    )
