"""Rotor-failure-tolerant geometric trajectory tracking for a quadrotor on three rotors.

Library layout:

* :mod:`trirotor.geometry` -- SO(3)/sphere primitives and error functions
* :mod:`trirotor.plant` -- full nonlinear rigid-body plant and rotor model
* :mod:`trirotor.attitude` -- reduced-attitude backstepping controller
* :mod:`trirotor.position` -- nested-saturation position controller
* :mod:`trirotor.allocation` -- thrust/torque inversion and actuator limits
* :mod:`trirotor.reference` -- reference trajectory generators
* :mod:`trirotor.certify` -- machine-checkable gain certificates
* :mod:`trirotor.sim` -- fixed-step closed-loop simulator and metrics
* :mod:`trirotor.cli` -- ``simulate`` / ``certify`` / ``sweep`` commands
"""

from trirotor.plant import InertialParams, RigidBodyState, RotorParams, RotorSet, Wrench
from trirotor.attitude import AttitudeCommand, AttitudeErrors, AttitudeGains, TorqueCommand
from trirotor.position import PositionGains, SaturationSpec, ThrustCommand, TranslationalErrors
from trirotor.allocation import AllocationResult
from trirotor.reference import TrajectorySample
from trirotor.certify import GainCertificate
from trirotor.sim import RunMetrics, ScenarioConfig, SimResult, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AllocationResult",
    "AttitudeCommand",
    "AttitudeErrors",
    "AttitudeGains",
    "GainCertificate",
    "InertialParams",
    "PositionGains",
    "RigidBodyState",
    "RotorParams",
    "RotorSet",
    "RunMetrics",
    "SaturationSpec",
    "ScenarioConfig",
    "SimResult",
    "ThrustCommand",
    "TorqueCommand",
    "TrajectorySample",
    "TranslationalErrors",
    "Wrench",
    "run_scenario",
]
