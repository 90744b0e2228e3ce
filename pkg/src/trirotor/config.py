"""YAML scenario configuration.

Every field of the simulation's parameter types is addressable from the
file; anything omitted falls back to the library defaults. See
``configs/`` in the repository root for complete annotated examples.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from trirotor.attitude import AttitudeGains
from trirotor.geometry import exp_so3, is_rotation, normalize
from trirotor.plant import InertialParams, RigidBodyState, RotorParams
from trirotor.position import PositionGains, SaturationSpec
from trirotor.reference import TRAJ_FIGURE_EIGHT, TRAJ_FIGURE_EIGHT_TRUE, TRAJ_HOVER, Trajectory
from trirotor.sim import ConfigError, ScenarioConfig

_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


def _require_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _vec3(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise ConfigError(f"{where} must be a list of 3 numbers")
    return arr


def _matrix3(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape == (3,):
        return np.diag(arr)
    if arr.shape == (3, 3):
        return arr
    raise ConfigError(f"{where} must be a 3-list (diagonal) or 3x3 matrix")


def _inertial(d: dict) -> InertialParams:
    _require_keys(d, {"m", "g", "J", "J_nominal", "J_r", "K_d"}, "inertial")
    kw = {}
    if "m" in d:
        kw["m"] = float(d["m"])
    if "g" in d:
        kw["g"] = float(d["g"])
    if "J" in d:
        kw["J"] = _matrix3(d["J"], "inertial.J")
    if "J_nominal" in d:
        kw["J_nominal"] = _vec3(d["J_nominal"], "inertial.J_nominal")
    if "J_r" in d:
        kw["J_r"] = float(d["J_r"])
    if "K_d" in d:
        kw["K_d"] = _matrix3(d["K_d"], "inertial.K_d")
    try:
        return InertialParams(**kw)
    except ValueError as e:
        raise ConfigError(f"inertial: {e}") from e


def _rotor(d: dict) -> RotorParams:
    _require_keys(
        d,
        {"arm", "omega", "b_L", "b_D", "b_D1", "b_D2", "b_D3", "mode", "thrust_min", "thrust_max"},
        "rotor",
    )
    kw = {}
    if "arm" in d:
        kw["arm"] = float(d["arm"])
    if "omega" in d:
        kw["omega_rotor"] = _vec3(d["omega"], "rotor.omega")
    if "b_L" in d:
        kw["b_L"] = float(d["b_L"])
    if "b_D" in d:
        bd = _vec3(d["b_D"], "rotor.b_D")
        kw["b_D1"], kw["b_D2"], kw["b_D3"] = float(bd[0]), float(bd[1]), float(bd[2])
    for key in ("b_D1", "b_D2", "b_D3"):
        if key in d:
            kw[key] = float(d[key])
    if "mode" in d:
        kw["mode"] = str(d["mode"])
    if "thrust_min" in d:
        kw["thrust_min"] = float(d["thrust_min"])
    if "thrust_max" in d:
        kw["thrust_max"] = float(d["thrust_max"])
    try:
        return RotorParams(**kw)
    except ValueError as e:
        raise ConfigError(f"rotor: {e}") from e


def _attitude(d: dict) -> AttitudeGains:
    _require_keys(
        d, {"k_q", "k_omega", "alpha", "delta", "tol", "rate_filter_cutoff"}, "attitude_gains"
    )
    kw = {k: float(v) for k, v in d.items()}
    try:
        return AttitudeGains(**kw)
    except ValueError as e:
        raise ConfigError(f"attitude_gains: {e}") from e


def _sat_spec(d: dict, where: str) -> SaturationSpec:
    _require_keys(d, {"a", "b", "s_b"}, where)
    try:
        return SaturationSpec(
            a=float(d["a"]), b=float(d["b"]),
            s_b=float(d["s_b"]) if "s_b" in d else None,
        )
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


def _position(d: dict) -> PositionGains:
    _require_keys(
        d, {"k1", "k2", "k_x", "k_v", "k2_root", "sigma1", "sigma2", "f_floor"}, "position_gains"
    )
    if ("k1" in d or "k2" in d) and ("k_x" in d or "k_v" in d):
        raise ConfigError("position_gains: give either (k1, k2) or (k_x, k_v), not both")
    kw = {}
    if "k_x" in d or "k_v" in d:
        from trirotor.certify import derive_k2

        k_x = float(d.get("k_x", 2.0))
        k_v = float(d.get("k_v", 3.0))
        try:
            roots = derive_k2(k_x, k_v)
        except ValueError as e:
            raise ConfigError(f"position_gains: {e}") from e
        which = str(d.get("k2_root", "larger"))
        if which not in ("smaller", "larger"):
            raise ConfigError("position_gains.k2_root must be 'smaller' or 'larger'")
        kw["k1"] = k_x
        kw["k2"] = roots[1] if which == "larger" else roots[0]
    else:
        if "k1" in d:
            kw["k1"] = float(d["k1"])
        if "k2" in d:
            kw["k2"] = float(d["k2"])
    if "sigma1" in d:
        kw["sigma1"] = _sat_spec(d["sigma1"], "position_gains.sigma1")
    if "sigma2" in d:
        kw["sigma2"] = _sat_spec(d["sigma2"], "position_gains.sigma2")
    if "f_floor" in d:
        kw["f_floor"] = float(d["f_floor"])
    try:
        return PositionGains(**kw)
    except ValueError as e:
        raise ConfigError(f"position_gains: {e}") from e


def _trajectory(d: dict) -> Trajectory:
    _require_keys(
        d, {"kind", "amplitude", "rate", "altitude", "true_eight", "point"}, "trajectory"
    )
    kind = str(d.get("kind", "figure_eight"))
    if kind == "hover":
        point = _vec3(d.get("point", [0.0, 0.0, 5.0]), "trajectory.point")
        return Trajectory(kind=TRAJ_HOVER, params=point)
    if kind != "figure_eight":
        raise ConfigError(f"unknown trajectory kind: {kind!r}")
    true_eight = bool(d.get("true_eight", False))
    return Trajectory(
        kind=TRAJ_FIGURE_EIGHT_TRUE if true_eight else TRAJ_FIGURE_EIGHT,
        params=np.array([
            float(d.get("amplitude", 2.0)),
            float(d.get("rate", 2.0)),
            float(d.get("altitude", 10.0)),
        ]),
    )


def _initial_state(d: dict) -> RigidBodyState:
    _require_keys(d, {"x", "v", "omega", "R", "attitude"}, "initial_state")
    x = _vec3(d.get("x", [0.0, 0.0, 0.0]), "initial_state.x")
    v = _vec3(d.get("v", [0.0, 0.0, 0.0]), "initial_state.v")
    omega = _vec3(d.get("omega", [0.0, 0.0, 0.0]), "initial_state.omega")
    if "R" in d and "attitude" in d:
        raise ConfigError("initial_state: give either R or attitude, not both")
    if "R" in d:
        R = np.asarray(d["R"], dtype=np.float64)
        if R.shape != (3, 3):
            raise ConfigError("initial_state.R must be a 3x3 matrix")
        if not is_rotation(R, tol=1e-6):
            raise ConfigError("initial_state.R is not a rotation matrix")
    elif "attitude" in d:
        att = d["attitude"]
        _require_keys(att, {"axis", "angle_deg", "angle_rad"}, "initial_state.attitude")
        axis = att.get("axis", "x")
        if isinstance(axis, str):
            if axis not in _AXES:
                raise ConfigError(f"unknown axis name: {axis!r}")
            axis = _AXES[axis]
        axis = normalize(_vec3(axis, "initial_state.attitude.axis"))
        if "angle_deg" in att and "angle_rad" in att:
            raise ConfigError("attitude: give angle_deg or angle_rad, not both")
        if "angle_rad" in att:
            angle = float(att["angle_rad"])
        else:
            angle = math.radians(float(att.get("angle_deg", 0.0)))
        R = exp_so3(axis * angle)
    else:
        R = np.eye(3)
    return RigidBodyState(x=x, v=v, R=R, Omega=omega)


_TOP_KEYS = {
    "inertial", "rotor", "attitude_gains", "position_gains", "trajectory",
    "initial_state", "duration", "dt_physics", "control_rate", "seed",
    "error_function", "certify",
}


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Build a scenario from a parsed configuration tree."""
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    _require_keys(data, _TOP_KEYS, "configuration root")
    kw = {}
    if "inertial" in data:
        kw["inertial"] = _inertial(data["inertial"] or {})
    if "rotor" in data:
        kw["rotor"] = _rotor(data["rotor"] or {})
    if "attitude_gains" in data:
        kw["attitude_gains"] = _attitude(data["attitude_gains"] or {})
    if "position_gains" in data:
        kw["position_gains"] = _position(data["position_gains"] or {})
    if "trajectory" in data:
        kw["trajectory"] = _trajectory(data["trajectory"] or {})
    if "initial_state" in data:
        kw["initial_state"] = _initial_state(data["initial_state"] or {})
    for key in ("duration", "dt_physics", "control_rate"):
        if key in data:
            kw[key] = float(data[key])
    if "seed" in data:
        kw["seed"] = int(data["seed"])
    if "error_function" in data:
        kw["error_function"] = str(data["error_function"])
    if "certify" in data:
        cert = data["certify"] or {}
        _require_keys(cert, {"theta0_deg", "theta0_rad", "c"}, "certify")
        if "theta0_deg" in cert and "theta0_rad" in cert:
            raise ConfigError("certify: give theta0_deg or theta0_rad, not both")
        if "theta0_deg" in cert:
            kw["certify_theta0"] = math.radians(float(cert["theta0_deg"]))
        elif "theta0_rad" in cert:
            kw["certify_theta0"] = float(cert["theta0_rad"])
        if "c" in cert:
            kw["certify_c"] = float(cert["c"])
    try:
        return ScenarioConfig(**kw)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario description from a YAML file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if data is None:
        data = {}
    return scenario_from_dict(data)


def set_by_path(data: dict, dotted: str, value: float) -> None:
    """Set ``data['a']['b']...`` from a dotted path, creating nodes as needed.

    Used by parameter sweeps; the leaf is always stored as a float.
    """
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into {k!r} in {dotted!r}")
    node[keys[-1]] = float(value)
