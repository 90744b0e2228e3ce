"""Fixed-step closed-loop simulator.

The physics integrator is a 4th-order Runge-Kutta scheme of
Munthe-Kaas type: position, velocity and body rates advance as flat
states while the attitude increment is integrated on the rotation
algebra and applied through the exponential map, so the rotation matrix
stays on the manifold to rounding accuracy.

The control loop runs at a fixed rate with zero-order hold. Each tick
computes, in order: reference sample, translational errors, thrust
vector command with pointing command and rate, collective thrust,
rate targets and their filtered slope, the torque law, allocation with
actuator clamping, and finally the realized wrench handed to the plant
for one or more physics substeps. Every physics step appends one log
record.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from trirotor.allocation import _solve_thrusts
from trirotor.attitude import AttitudeCommand, AttitudeGains, _tangent_to_rates, _torque_law
from trirotor.certify import GainCertificate, build_certificate, check_initial_condition
from trirotor.geometry import _cross, exp_so3, orthonormalize, rotation_defect
from trirotor.plant import (
    InertialParams,
    RigidBodyState,
    RotorParams,
    Wrench,
    _accel,
    _omega_dot,
    _rotor_thrust_and_drag,
    _wrench_from_rotors,
)
from trirotor.position import PositionGains, _sat, _sigma_bar_args, _sigma_bar_rate, position_command
from trirotor.reference import Trajectory, _sample

# run outcome codes (also used for CLI exit codes)
STATUS_OK = 0
STATUS_DIVERGED = 2
STATUS_DEGENERATE_THRUST = 4

_REASONS = {
    0: "",
    1: "non-finite state",
    2: "attitude reached the antipode of the command",
    3: "thrust command degenerate",
}

LOG_COLUMNS = (
    "t",
    "x", "y", "z",
    "vx", "vy", "vz",
    "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33",
    "wx", "wy", "wz",
    "qx", "qy", "qz",
    "qdx", "qdy", "qdz",
    "psi",
    "ex", "ey", "ez",
    "evx", "evy", "evz",
    "ew1", "ew2",
    "wd1", "wd2",
    "U1", "U2",
    "f",
    "fhatx", "fhaty", "fhatz",
    "T1", "T2", "T3",
    "pitch1", "pitch2", "pitch3",
    "sat1", "sat2", "sat3",
    "lyap",
    "satin_x", "satin_y", "satin_z",
    "satout_x", "satout_y", "satout_z",
)

_N_COLS = len(LOG_COLUMNS)
_COL_INDEX = {name: i for i, name in enumerate(LOG_COLUMNS)}


# ---------------------------------------------------------------------------
# integrator

@njit(cache=True, nogil=True)
def _dexpinv(s, W):
    # inverse differential of the exponential, truncated after two
    # commutators (sufficient for a 4th-order scheme); signs are for the
    # body-frame (right) composition R @ exp_so3(s)
    sxw = _cross(s, W)
    sxsxw = _cross(s, sxw)
    return W + 0.5 * sxw + (1.0 / 12.0) * sxsxw


@njit(cache=True, nogil=True)
def _rk4_step(x, v, R, W, f, M, m, g, J, J_inv, Jr_spin, Kd, dt):
    h = 0.5 * dt

    a1 = _accel(R, f, m, g)
    kW1 = _omega_dot(W, M, J, J_inv, Jr_spin, Kd)
    ks1 = W
    kx1 = v

    s2 = h * ks1
    R2 = R @ exp_so3(s2)
    v2 = v + h * a1
    W2 = W + h * kW1
    a2 = _accel(R2, f, m, g)
    kW2 = _omega_dot(W2, M, J, J_inv, Jr_spin, Kd)
    ks2 = _dexpinv(s2, W2)
    kx2 = v2

    s3 = h * ks2
    R3 = R @ exp_so3(s3)
    v3 = v + h * a2
    W3 = W + h * kW2
    a3 = _accel(R3, f, m, g)
    kW3 = _omega_dot(W3, M, J, J_inv, Jr_spin, Kd)
    ks3 = _dexpinv(s3, W3)
    kx3 = v3

    s4 = dt * ks3
    R4 = R @ exp_so3(s4)
    v4 = v + dt * a3
    W4 = W + dt * kW3
    a4 = _accel(R4, f, m, g)
    kW4 = _omega_dot(W4, M, J, J_inv, Jr_spin, Kd)
    ks4 = _dexpinv(s4, W4)
    kx4 = v4

    sixth = dt / 6.0
    xn = x + sixth * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4)
    vn = v + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    Wn = W + sixth * (kW1 + 2.0 * kW2 + 2.0 * kW3 + kW4)
    sn = sixth * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4)
    Rn = R @ exp_so3(sn)
    return xn, vn, Rn, Wn


@njit(cache=True, nogil=True)
def _integrate_fixed(x, v, R, W, f, M, m, g, J, J_inv, Jr_spin, Kd, dt, n_steps, ortho_tol):
    for _ in range(n_steps):
        x, v, R, W = _rk4_step(x, v, R, W, f, M, m, g, J, J_inv, Jr_spin, Kd, dt)
        if rotation_defect(R) > ortho_tol:
            R = orthonormalize(R)
    return x, v, R, W


# ---------------------------------------------------------------------------
# closed-loop driver

@njit(cache=True, nogil=True)
def _run_closed_loop(
    x0, v0, R0, W0,
    n_ctrl, n_sub, dt_phys,
    m, g, J, J_inv, Jr_spin, Kd,
    arm, w_rot, bL, bD1, bD2, bD3, tmin, tmax,
    J_nom,
    k_q, k_om, alpha, delta, tol_u, lpf_blend,
    k1, k2, a1, b1, sb1, a2, b2, sb2, f_floor,
    traj_kind, traj_params,
    mollified,
    eps_antipodal,
    ortho_tol,
):
    dt_ctrl = n_sub * dt_phys
    n_rows = n_ctrl * n_sub
    log = np.zeros((n_rows, _N_COLS))

    x = x0.copy()
    v = v0.copy()
    R = R0.copy()
    W = W0.copy()

    prev_wd = np.zeros(2)
    wd_est = np.zeros(2)

    sqrt2 = np.sqrt(2.0)
    status = 0
    reason = 0
    row = 0

    for k in range(n_ctrl):
        t = k * dt_ctrl

        # reference and translational errors
        flat = _sample(traj_kind, traj_params, t)
        ex = x - flat[0:3]
        ev = v - flat[3:6]
        ad = flat[6:9]
        jd = flat[9:12]

        # thrust-vector command
        inner, outer = _sigma_bar_args(ex, ev, m, k1, k2, a1, b1, sb1)
        fhat = np.empty(3)
        for i in range(3):
            fhat[i] = -_sat(outer[i], a2, b2, sb2) + m * ad[i]
        fhat[2] += m * g
        nf = np.sqrt(fhat[0] ** 2 + fhat[1] ** 2 + fhat[2] ** 2)
        if not np.isfinite(nf):
            status = 2
            reason = 1
            break
        if nf < f_floor:
            status = 4
            reason = 3
            break
        qd = fhat / nf
        q = np.array([R[0, 2], R[1, 2], R[2, 2]])
        f = fhat[0] * q[0] + fhat[1] * q[1] + fhat[2] * q[2]

        # pointing-command rate via the chain rule through the saturations
        dev = (f / m) * q - ad
        dev[2] -= g
        d_sigma = _sigma_bar_rate(ex, ev, ev, dev, m, k1, k2, a1, b1, sb1, a2, b2, sb2)
        fhat_dot = d_sigma + m * jd
        qdotd = fhat_dot - qd * (qd[0] * fhat_dot[0] + qd[1] * fhat_dot[1] + qd[2] * fhat_dot[2])
        qd_rate = qdotd / nf

        # attitude errors
        cq = qd[0] * q[0] + qd[1] * q[1] + qd[2] * q[2]
        if cq <= -1.0 + eps_antipodal and mollified == 0:
            status = 2
            reason = 2
            break
        if mollified == 1:
            e_q = _cross(q, _cross(q, qd))
        else:
            e_q = _cross(q, _cross(q, qd)) / (sqrt2 * np.sqrt(1.0 + cq))

        # rate target and its filtered slope
        tv = _cross(_cross(qd, qd_rate), q)
        w_vec = tv - k_q * e_q
        wd = _tangent_to_rates(R, w_vec)
        if k == 0:
            wd_est[0] = 0.0
            wd_est[1] = 0.0
        else:
            raw0 = (wd[0] - prev_wd[0]) / dt_ctrl
            raw1 = (wd[1] - prev_wd[1]) / dt_ctrl
            wd_est[0] += lpf_blend * (raw0 - wd_est[0])
            wd_est[1] += lpf_blend * (raw1 - wd_est[1])
        prev_wd[0] = wd[0]
        prev_wd[1] = wd[1]

        e_w = np.array([W[0] - wd[0], W[1] - wd[1]])
        U = _torque_law(R, W, e_q, e_w, wd_est, J_nom, alpha, k_om, delta, tol_u)

        # allocation with actuator limits
        M1c = J_nom[0] * U[0]
        M2c = J_nom[1] * U[1]
        T1, T2, T3 = _solve_thrusts(f, M1c, M2c, arm)
        Tc = np.array([T1, T2, T3])
        sat_flags = np.zeros(3)
        for i in range(3):
            if Tc[i] < tmin:
                Tc[i] = tmin
                sat_flags[i] = 1.0
            elif Tc[i] > tmax:
                Tc[i] = tmax
                sat_flags[i] = 1.0
        pitch = np.empty(3)
        drag = np.empty(3)
        for i in range(3):
            pitch[i] = Tc[i] / (bL * w_rot[i] * w_rot[i])
            _, drag[i] = _rotor_thrust_and_drag(pitch[i], w_rot[i], bL, bD1, bD2, bD3)
        fr, M1r, M2r, M3r = _wrench_from_rotors(
            Tc[0], Tc[1], Tc[2], drag[0], drag[1], drag[2], arm
        )
        Mr = np.array([M1r, M2r, M3r])

        # physics substeps under the held command
        for j in range(n_sub):
            tr = t + j * dt_phys
            fr_row = _sample(traj_kind, traj_params, tr)
            qr = np.array([R[0, 2], R[1, 2], R[2, 2]])
            cr = qd[0] * qr[0] + qd[1] * qr[1] + qd[2] * qr[2]
            if mollified == 1:
                psi_r = 1.0 - cr
            else:
                s_r = 1.0 + cr
                if s_r < 0.0:
                    s_r = 0.0
                psi_r = 2.0 - sqrt2 * np.sqrt(s_r)
            ew0 = W[0] - wd[0]
            ew1 = W[1] - wd[1]
            lyap = alpha * psi_r + 0.5 * (ew0 * ew0 + ew1 * ew1)

            log[row, 0] = tr
            log[row, 1] = x[0]
            log[row, 2] = x[1]
            log[row, 3] = x[2]
            log[row, 4] = v[0]
            log[row, 5] = v[1]
            log[row, 6] = v[2]
            log[row, 7] = R[0, 0]
            log[row, 8] = R[0, 1]
            log[row, 9] = R[0, 2]
            log[row, 10] = R[1, 0]
            log[row, 11] = R[1, 1]
            log[row, 12] = R[1, 2]
            log[row, 13] = R[2, 0]
            log[row, 14] = R[2, 1]
            log[row, 15] = R[2, 2]
            log[row, 16] = W[0]
            log[row, 17] = W[1]
            log[row, 18] = W[2]
            log[row, 19] = qr[0]
            log[row, 20] = qr[1]
            log[row, 21] = qr[2]
            log[row, 22] = qd[0]
            log[row, 23] = qd[1]
            log[row, 24] = qd[2]
            log[row, 25] = psi_r
            log[row, 26] = x[0] - fr_row[0]
            log[row, 27] = x[1] - fr_row[1]
            log[row, 28] = x[2] - fr_row[2]
            log[row, 29] = v[0] - fr_row[3]
            log[row, 30] = v[1] - fr_row[4]
            log[row, 31] = v[2] - fr_row[5]
            log[row, 32] = ew0
            log[row, 33] = ew1
            log[row, 34] = wd[0]
            log[row, 35] = wd[1]
            log[row, 36] = U[0]
            log[row, 37] = U[1]
            log[row, 38] = f
            log[row, 39] = fhat[0]
            log[row, 40] = fhat[1]
            log[row, 41] = fhat[2]
            log[row, 42] = Tc[0]
            log[row, 43] = Tc[1]
            log[row, 44] = Tc[2]
            log[row, 45] = pitch[0]
            log[row, 46] = pitch[1]
            log[row, 47] = pitch[2]
            log[row, 48] = sat_flags[0]
            log[row, 49] = sat_flags[1]
            log[row, 50] = sat_flags[2]
            log[row, 51] = lyap
            log[row, 52] = inner[0]
            log[row, 53] = inner[1]
            log[row, 54] = inner[2]
            log[row, 55] = outer[0]
            log[row, 56] = outer[1]
            log[row, 57] = outer[2]
            row += 1

            x, v, R, W = _rk4_step(x, v, R, W, fr, Mr, m, g, J, J_inv, Jr_spin, Kd, dt_phys)

        if not (
            np.isfinite(x[0]) and np.isfinite(x[1]) and np.isfinite(x[2])
            and np.isfinite(W[0]) and np.isfinite(W[1]) and np.isfinite(W[2])
        ):
            status = 2
            reason = 1
            break
        if rotation_defect(R) > ortho_tol:
            R = orthonormalize(R)

    return log, row, status, reason


# ---------------------------------------------------------------------------
# configuration, metrics, results

class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    """Everything a closed-loop run needs."""

    inertial: InertialParams = field(default_factory=InertialParams)
    rotor: RotorParams = field(default_factory=RotorParams)
    attitude_gains: AttitudeGains = field(default_factory=AttitudeGains)
    position_gains: PositionGains = field(default_factory=PositionGains)
    trajectory: Trajectory = field(default_factory=Trajectory)
    initial_state: RigidBodyState = field(default_factory=RigidBodyState.at_rest)
    duration: float = 20.0
    dt_physics: float = 1.0e-3
    control_rate: float = 1000.0
    seed: int = 0
    error_function: str = "paper"
    certify_theta0: float = math.radians(30.0)
    certify_c: float = 0.2

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.dt_physics <= 0 or self.control_rate <= 0:
            raise ConfigError("dt_physics and control_rate must be positive")
        dt_ctrl = 1.0 / self.control_rate
        if self.dt_physics > dt_ctrl * (1 + 1e-9):
            raise ConfigError("dt_physics must not exceed the control period")
        n_sub = round(dt_ctrl / self.dt_physics)
        if abs(n_sub * self.dt_physics - dt_ctrl) > 1e-9 * dt_ctrl:
            raise ConfigError("control period must be an integer multiple of dt_physics")
        if self.error_function not in ("paper", "mollified"):
            raise ConfigError(f"unknown error_function: {self.error_function!r}")

    @property
    def n_substeps(self) -> int:
        return round(1.0 / (self.control_rate * self.dt_physics))

    @property
    def n_control_steps(self) -> int:
        return round(self.duration * self.control_rate)


def exact_model_variant(cfg: ScenarioConfig) -> ScenarioConfig:
    """Variant for Lyapunov checks: ideal plant and controller assumptions.

    Removes plant gyroscopic moment and rotational drag, gives the plant
    the controller's nominal inertia, switches off the robustifying term
    and disables the rate-target derivative filter (the decrease argument
    assumes the true slope, and the filter's group delay would otherwise
    leave a small bias the monotonicity check trips over).
    """
    inertial = replace(
        cfg.inertial,
        J=np.diag(cfg.inertial.J_nominal),
        J_r=0.0,
        K_d=np.zeros((3, 3)),
    )
    gains = replace(cfg.attitude_gains, delta=0.0, rate_filter_cutoff=math.inf)
    return replace(cfg, inertial=inertial, attitude_gains=gains)


@dataclass
class RunMetrics:
    """Deterministic summary numbers computed from a run log."""

    settle_time_psi: float
    settle_time_ex: float
    sup_psi: float
    final_ex_norm: float
    max_thrust: float
    saturation_fraction: float
    v1_monotone_fraction: float

    def as_dict(self) -> dict:
        return {
            "settle_time_psi": self.settle_time_psi,
            "settle_time_ex": self.settle_time_ex,
            "sup_psi": self.sup_psi,
            "final_ex_norm": self.final_ex_norm,
            "max_thrust": self.max_thrust,
            "saturation_fraction": self.saturation_fraction,
            "v1_monotone_fraction": self.v1_monotone_fraction,
        }


def _settle_time(t: np.ndarray, signal: np.ndarray, threshold: float) -> float:
    """Earliest time after which the signal stays at or below the threshold."""
    above = signal > threshold
    if not above.any():
        return 0.0
    last = int(np.nonzero(above)[0][-1])
    if last == len(signal) - 1:
        return math.nan
    return float(t[last + 1])


def compute_metrics(
    log: np.ndarray,
    n_sub: int = 1,
    psi_threshold: float = 0.02,
    ex_threshold: float = 0.1,
    psi_floor: float = 1e-6,
) -> RunMetrics:
    """Summary metrics from a (possibly truncated) log array.

    ``v1_monotone_fraction`` is the fraction of control steps whose
    Lyapunov value did not increase, counted only while the attitude
    error exceeds ``psi_floor``; 1.0 when no step qualifies.
    """
    if log.shape[0] == 0:
        raise ValueError("empty log")
    c = _COL_INDEX
    t = log[:, c["t"]]
    psi = log[:, c["psi"]]
    ex = np.sqrt(log[:, c["ex"]] ** 2 + log[:, c["ey"]] ** 2 + log[:, c["ez"]] ** 2)

    ticks = np.arange(0, log.shape[0], n_sub)
    v1 = log[ticks, c["lyap"]]
    psi_ticks = psi[ticks]
    considered = 0
    monotone = 0
    for i in range(1, len(ticks)):
        if psi_ticks[i - 1] > psi_floor:
            considered += 1
            if v1[i] - v1[i - 1] <= 0.0:
                monotone += 1
    frac = 1.0 if considered == 0 else monotone / considered

    thrust_cols = log[:, [c["T1"], c["T2"], c["T3"]]]
    sat_cols = log[:, [c["sat1"], c["sat2"], c["sat3"]]]
    return RunMetrics(
        settle_time_psi=_settle_time(t, psi, psi_threshold),
        settle_time_ex=_settle_time(t, ex, ex_threshold),
        sup_psi=float(psi.max()),
        final_ex_norm=float(ex[-1]),
        max_thrust=float(thrust_cols.max()),
        saturation_fraction=float(np.mean(sat_cols.any(axis=1))),
        v1_monotone_fraction=float(frac),
    )


@dataclass
class SimResult:
    """Log, outcome, metrics and pre-flight report of one scenario run."""

    log: np.ndarray
    columns: tuple[str, ...]
    status: int
    reason: str
    metrics: RunMetrics | None
    certificate: GainCertificate
    basin_ok: bool
    basin_margin: float
    config: ScenarioConfig

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def column(self, name: str) -> np.ndarray:
        return self.log[:, _COL_INDEX[name]]

    def ex_norm(self) -> np.ndarray:
        c = _COL_INDEX
        return np.sqrt(
            self.log[:, c["ex"]] ** 2 + self.log[:, c["ey"]] ** 2 + self.log[:, c["ez"]] ** 2
        )


# ---------------------------------------------------------------------------
# public entry points

def step(
    state: RigidBodyState, wrench: Wrench, p: InertialParams, rotor: RotorParams, dt: float
) -> RigidBodyState:
    """Advance the plant one physics step under a fixed wrench."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    J_inv = np.linalg.inv(p.J)
    x, v, R, W = _rk4_step(
        state.x, state.v, state.R, state.Omega,
        wrench.f, wrench.M,
        p.m, p.g, p.J, J_inv, p.J_r * rotor.spin_sum, p.K_d, dt,
    )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(W))):
        raise FloatingPointError("simulation diverged")
    if rotation_defect(R) > 1e-12:
        R = orthonormalize(R)
    return RigidBodyState(x, v, R, W)


def integrate_constant_wrench(
    state: RigidBodyState,
    wrench: Wrench,
    p: InertialParams,
    rotor: RotorParams,
    dt: float,
    duration: float,
) -> RigidBodyState:
    """Integrate the plant under a constant wrench for ``duration`` seconds."""
    n = round(duration / dt)
    J_inv = np.linalg.inv(p.J)
    x, v, R, W = _integrate_fixed(
        state.x, state.v, state.R, state.Omega,
        wrench.f, wrench.M,
        p.m, p.g, p.J, J_inv, p.J_r * rotor.spin_sum, p.K_d, dt, n, 1e-12,
    )
    return RigidBodyState(x, v, R, W)


def initial_attitude_command(cfg: ScenarioConfig) -> AttitudeCommand:
    """Attitude command the position loop would issue at t = 0."""
    sample = cfg.trajectory.sample(0.0)
    cmd = position_command(
        cfg.initial_state, sample, cfg.inertial.m, cfg.inertial.g, cfg.position_gains
    )
    return AttitudeCommand(q_d=cmd.q_d, q_d_rate=cmd.q_d_rate)


def run_scenario(cfg: ScenarioConfig, warn_on_failed_preconditions: bool = True) -> SimResult:
    """Run one closed-loop scenario.

    Pre-flight certification and the basin check are evaluated and
    recorded; the run proceeds regardless (with warnings), since the
    certified conditions are sufficient, not necessary.
    """
    cert = build_certificate(
        cfg.position_gains,
        cfg.attitude_gains,
        cfg.inertial.m,
        cfg.trajectory,
        cfg.duration,
        cfg.certify_theta0,
        cfg.certify_c,
        cfg.inertial.g,
    )
    try:
        cmd0 = initial_attitude_command(cfg)
        basin_ok, basin_margin = check_initial_condition(
            cfg.initial_state, cmd0, cfg.attitude_gains
        )
    except ValueError:
        basin_ok, basin_margin = False, -math.inf
    if warn_on_failed_preconditions:
        if not basin_ok:
            warnings.warn("initial condition outside the certified basin", RuntimeWarning)
        for name, ok in cert.passes.items():
            if not ok:
                warnings.warn(f"gain certificate condition failed: {name}", RuntimeWarning)

    gains = cfg.attitude_gains
    cutoff = gains.rate_filter_cutoff
    if cutoff is None or math.isinf(cutoff):
        blend = 1.0
    else:
        blend = 1.0 - math.exp(-cutoff / cfg.control_rate)

    pos = cfg.position_gains
    s1, s2 = pos.sigma1, pos.sigma2
    log, rows, status, reason = _run_closed_loop(
        cfg.initial_state.x, cfg.initial_state.v, cfg.initial_state.R, cfg.initial_state.Omega,
        cfg.n_control_steps, cfg.n_substeps, cfg.dt_physics,
        cfg.inertial.m, cfg.inertial.g,
        cfg.inertial.J, np.linalg.inv(cfg.inertial.J),
        cfg.inertial.J_r * cfg.rotor.spin_sum, cfg.inertial.K_d,
        cfg.rotor.arm, cfg.rotor.omega_rotor,
        cfg.rotor.b_L, cfg.rotor.b_D1, cfg.rotor.b_D2, cfg.rotor.b_D3,
        cfg.rotor.thrust_min, cfg.rotor.thrust_max,
        cfg.inertial.J_nominal,
        gains.k_q, gains.k_omega, gains.alpha, gains.delta, gains.tol, blend,
        pos.k1, pos.k2, s1.a, s1.b, s1.s_b, s2.a, s2.b, s2.s_b, pos.f_floor,
        cfg.trajectory.kind, cfg.trajectory.params,
        1 if cfg.error_function == "mollified" else 0,
        1e-9,
        1e-12,
    )
    log = log[:rows]
    metrics = compute_metrics(log, cfg.n_substeps) if rows > 0 else None
    return SimResult(
        log=log,
        columns=LOG_COLUMNS,
        status=status,
        reason=_REASONS[reason],
        metrics=metrics,
        certificate=cert,
        basin_ok=basin_ok,
        basin_margin=basin_margin,
        config=cfg,
    )
