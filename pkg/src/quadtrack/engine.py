"""Closed-loop assembly, fixed-step integration, metrics, and trace output.

One derivative evaluation walks the cascade in this order:

    1. reference trajectory at t
    2. position command filters
    3. position observers read measured positions and current estimates
    4. position errors -> virtual accelerations (minus disturbance estimates)
    5. thrust magnitude + desired roll/pitch extraction
    6. attitude command filters on (phi_des, theta_des, psi_des)
    7. attitude observers
    8. attitude torque laws
    9. mixing -> rotor speeds -> residual propeller speed
   10. plant derivative with the injected disturbances
   11. filter/observer derivatives assembled into the 48-vector

The torque laws need the residual propeller speed, which depends on the
rotor speeds mixed from those same torques.  The loop is closed with a fixed
two-pass evaluation (first pass with zero residual speed, then re-mix); the
gyroscopic terms are four orders of magnitude below the rest of the law, so
the fixed point is reached to machine accuracy and the derivative stays a
pure function of (t, state).

Augmented state layout (48 entries): plant states 0..11, then one rig of
[z1, z2, sigma, xhat1, xhat2, gamma] per channel in the order roll, pitch,
yaw, x, y, z.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .attitude import (
    ATTITUDE_AXES,
    attitude_coupling,
    attitude_input_gain,
    attitude_torque,
    auxiliary_control,
    channel_errors,
)
from .disturbances import make_generator
from .errors import (
    AngleGuardError,
    DenominatorTooSmallError,
    NonFiniteError,
    SimulationError,
)
from .filters import command_filter_derivative, first_order_filter_derivative
from .observers import do_derivative, do_estimate, hgo_derivative
from .position import (
    acceleration_from_attitude,
    extract_thrust_and_attitude,
    position_virtual_control,
    reference_trajectory,
    waypoint_trajectory,
)
from .scenario import ANGLE_GUARD_MARGIN, CHANNELS, Scenario, scenario_digest, scenario_to_dict
from .vehicle import ControlInputs, mix_inputs_to_rotor_speeds, residual_speed, state_derivative

PLANT_DIM = 12
RIG_SIZE = 6
STATE_DIM = PLANT_DIM + RIG_SIZE * len(CHANNELS)

# Offsets inside one rig slice.
OFF_Z1, OFF_Z2, OFF_SIGMA, OFF_XHAT1, OFF_XHAT2, OFF_GAMMA = range(RIG_SIZE)


def rig_base(channel: str) -> int:
    return PLANT_DIM + RIG_SIZE * CHANNELS.index(channel)


COLUMNS = (
    ("t",)
    + tuple(f"x{i}" for i in range(1, 13))
    + tuple(f"xhat{i}" for i in range(1, 13))
    + ("xr", "yr", "zr", "phi_des", "theta_des", "psi_des")
    + ("Up", "Uphi", "Utheta", "Upsi")
    + ("w1", "w2", "w3", "w4")
    + ("Ux", "Uy", "Uz")
    + ("d_phi", "d_theta", "d_psi", "d_x", "d_y", "d_z")
    + ("dhat_phi", "dhat_theta", "dhat_psi", "dhat_x", "dhat_y", "dhat_z")
    + ("e_x", "e_y", "e_z", "e_phi", "e_theta", "e_psi")
)

TRACE_SCHEMA_VERSION = 1


class _ChannelWork(NamedTuple):
    """Per-channel intermediates carried from the error pass to assembly."""

    base: int
    dz1: float
    dz2: float
    dsigma: float
    xh1: float
    xh2: float
    gamma: float
    fb2: float       # rate used by control and observer (estimate or true)
    xi1: float
    xi2: float
    nu: float
    sigma: float
    dhat: float
    u: float         # virtual control (position) or torque (attitude, filled late)


@dataclass(slots=True)
class StepSignals:
    """Everything the logger needs from one derivative evaluation."""

    t: float
    deriv: np.ndarray
    refs: Tuple[float, ...]          # xr, yr, zr, phi_des, theta_des, psi_des
    inputs: ControlInputs
    speeds: Tuple[float, ...]
    clamped: bool
    virtuals: Tuple[float, float, float]
    disturbances: Tuple[float, ...]  # d_phi .. d_z as injected
    dhat: Tuple[float, ...]          # dhat_phi .. dhat_z
    errors: Tuple[float, ...]        # e_x, e_y, e_z, e_phi, e_theta, e_psi
    estimates: Tuple[float, ...]     # xhat1 .. xhat12
    omega_r: float


class ClosedLoop:
    """Derivative field of the full closed loop for one scenario."""

    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = scenario
        self.params = scenario.params
        self._psi_des = scenario.psi_des
        self._tsf = scenario.toggles.true_state_feedback
        self._position_do = scenario.toggles.position_do
        self._gains = tuple(
            (g.p, g.k, g.tau, g.m1, g.m2, g.beta1, g.beta2, g.eps, g.lam)
            for g in (scenario.gains[ch] for ch in CHANNELS)
        )
        self._att_gain = tuple(attitude_input_gain(ax, self.params) for ax in ATTITUDE_AXES)
        if scenario.trajectory["type"] == "helix":
            self._traj = reference_trajectory
        else:
            self._traj = waypoint_trajectory(scenario.trajectory["points"])
        self._gens = tuple(
            make_generator(
                scenario.disturbances[ch],
                np.random.SeedSequence((scenario.seed, idx)),
                scenario.duration,
            )
            for idx, ch in enumerate(CHANNELS)
        )
        self._angle_limit = math.pi / 2.0 - ANGLE_GUARD_MARGIN

    def trajectory(self, t: float):
        return self._traj(t)

    def initial_state(self) -> np.ndarray:
        """Augmented initial condition.

        Position command filters start on the trajectory; attitude command
        filters start at the measured angle, because their references are
        generated by the outer loop and seeding them there would inject a
        spurious initial error through sigma(0) = nu(0).  Observers start at
        the measured outputs with zero rate, and the disturbance observers
        start with a zero estimate.
        """
        a = np.zeros(STATE_DIM)
        a[:PLANT_DIM] = self.scenario.initial_state
        refs0 = self._traj(0.0)
        measured = (a[0], a[2], a[4], a[6], a[8], a[10])
        rates = (a[1], a[3], a[5], a[7], a[9], a[11])
        filter_refs = (a[0], a[2], a[4], refs0[0], refs0[1], refs0[2])
        for i in range(6):
            base = PLANT_DIM + RIG_SIZE * i
            p = self._gains[i][0]
            lam = self._gains[i][8]
            fb2 = rates[i] if self._tsf else 0.0
            xi1 = measured[i] - filter_refs[i]
            nu = auxiliary_control(p, xi1, 0.0)
            a[base + OFF_Z1] = filter_refs[i]
            a[base + OFF_SIGMA] = nu          # lag filter starts at its input
            a[base + OFF_XHAT1] = measured[i]
            a[base + OFF_GAMMA] = -lam * fb2  # zero initial disturbance estimate
        return a

    def derivative(self, t: float, a) -> np.ndarray:
        return self._eval(t, a, collect=False)

    def signals(self, t: float, a) -> StepSignals:
        return self._eval(t, a, collect=True)

    def _eval(self, t, a, collect):
        st = a.tolist() if isinstance(a, np.ndarray) else list(a)
        x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, x11, x12 = st[:PLANT_DIM]
        if abs(x1) >= self._angle_limit or abs(x3) >= self._angle_limit:
            raise AngleGuardError(t, x1, x3)

        params = self.params
        tsf = self._tsf
        xr, yr, zr = self._traj(t)
        psi_des = self._psi_des

        # Position loop: filters, errors, virtual accelerations.
        pos_meas = (x7, x9, x11)
        pos_rate = (x8, x10, x12)
        pos_refs = (xr, yr, zr)
        pos = []
        for i in range(3):
            base = PLANT_DIM + RIG_SIZE * (3 + i)
            z1, z2, sg, xh1, xh2, gm = st[base:base + RIG_SIZE]
            p, k, tau, m1, m2, _, _, _, lam = self._gains[3 + i]
            dz1, dz2 = command_filter_derivative(z1, z2, m1, m2, pos_refs[i])
            fb1, fb2 = (pos_meas[i], pos_rate[i]) if tsf else (xh1, xh2)
            xi1, xi2, _, nu = channel_errors(p, fb1, fb2, z1, z2, sg)
            dsg = first_order_filter_derivative(sg, nu, tau)
            dhat = do_estimate(gm, lam, fb2)
            u_ax = position_virtual_control(
                k, tau, xi1, xi2, nu, sg, dz2, dhat if self._position_do else 0.0
            )
            pos.append(_ChannelWork(base, dz1, dz2, dsg, xh1, xh2, gm, fb2,
                                    xi1, xi2, nu, sg, dhat, u_ax))
        ux, uy, uz = pos[0].u, pos[1].u, pos[2].u

        # Underactuation resolution.
        setp = extract_thrust_and_attitude(params, ux, uy, uz, psi_des)
        phi_des, theta_des, _, up = setp

        # Attitude loop: filters and errors first, torques once the residual
        # propeller speed is known.
        att_meas = (x1, x3, x5)
        att_rate = (x2, x4, x6)
        att_refs = (phi_des, theta_des, psi_des)
        att = []
        for i in range(3):
            base = PLANT_DIM + RIG_SIZE * i
            z1, z2, sg, xh1, xh2, gm = st[base:base + RIG_SIZE]
            p, k, tau, m1, m2, _, _, _, lam = self._gains[i]
            dz1, dz2 = command_filter_derivative(z1, z2, m1, m2, att_refs[i])
            fb1, fb2 = (att_meas[i], att_rate[i]) if tsf else (xh1, xh2)
            xi1, xi2, _, nu = channel_errors(p, fb1, fb2, z1, z2, sg)
            dsg = first_order_filter_derivative(sg, nu, tau)
            dhat = do_estimate(gm, lam, fb2)
            att.append(_ChannelWork(base, dz1, dz2, dsg, xh1, xh2, gm, fb2,
                                    xi1, xi2, nu, sg, dhat, 0.0))

        fb_rates = (att[0].fb2, att[1].fb2, att[2].fb2)
        cross = (
            (fb_rates[1], fb_rates[2]),
            (fb_rates[0], fb_rates[2]),
            (fb_rates[0], fb_rates[1]),
        )

        def torque_set(omega_r):
            out = []
            for i, axis in enumerate(ATTITUDE_AXES):
                w = att[i]
                k, tau = self._gains[i][1], self._gains[i][2]
                out.append(attitude_torque(
                    axis, params, k, tau, w.xi1, w.xi2, w.nu, w.sigma,
                    cross[i][0], cross[i][1], omega_r, w.dz2, w.dhat))
            return out

        if params.fixed_residual_speed is not None:
            torques = torque_set(params.fixed_residual_speed)
            u = ControlInputs(up, torques[0], torques[1], torques[2])
            mix = mix_inputs_to_rotor_speeds(params, u)
            omega_final = params.fixed_residual_speed
        else:
            torques = torque_set(0.0)
            mix = mix_inputs_to_rotor_speeds(
                params, ControlInputs(up, torques[0], torques[1], torques[2]))
            torques = torque_set(residual_speed(params, mix.speeds))
            u = ControlInputs(up, torques[0], torques[1], torques[2])
            mix = mix_inputs_to_rotor_speeds(params, u)
            omega_final = residual_speed(params, mix.speeds)

        # Plant with injected disturbances.
        d_now = tuple(g.value(t) for g in self._gens)
        deriv = np.empty(STATE_DIM)
        deriv[:PLANT_DIM] = state_derivative(params, st[:PLANT_DIM], u, omega_final, d_now)

        # Observer and filter derivatives.  High-gain observers always run on
        # their own estimates so the oracle feedback mode leaves them intact.
        est_rates = (att[0].xh2, att[1].xh2, att[2].xh2)
        est_cross = (
            (est_rates[1], est_rates[2]),
            (est_rates[0], est_rates[2]),
            (est_rates[0], est_rates[1]),
        )
        for i, axis in enumerate(ATTITUDE_AXES):
            w = att[i]
            _, _, _, _, _, b1, b2, eps, lam = self._gains[i]
            g1 = self._att_gain[i]
            f_nom = attitude_coupling(axis, params, est_cross[i][0], est_cross[i][1], omega_final)
            dxh1, dxh2 = hgo_derivative(w.xh1, w.xh2, b1, b2, eps, att_meas[i],
                                        f_nom, g1 * torques[i])
            coupling_fb = attitude_coupling(axis, params, cross[i][0], cross[i][1], omega_final)
            dgm = do_derivative(w.gamma, lam, w.fb2, coupling_fb, g1, torques[i])
            deriv[w.base:w.base + RIG_SIZE] = (w.dz1, w.dz2, w.dsigma, dxh1, dxh2, dgm)

        est_angles = (att[0].xh1, att[1].xh1, att[2].xh1)
        f_pos = acceleration_from_attitude(params, est_angles[0], est_angles[1],
                                           est_angles[2], up)
        # The translational rows are double integrators in the achieved
        # virtual input (thrust tilted by the actual attitude), so that is
        # what the disturbance observers must consume.  Feeding them the
        # commanded virtual control instead would cancel their damping term,
        # because the command already contains -dhat, and wind them up on the
        # attitude tracking lag.
        if tsf:
            f_do = acceleration_from_attitude(params, x1, x3, x5, up)
        else:
            f_do = f_pos
        for i in range(3):
            w = pos[i]
            _, _, _, _, _, b1, b2, eps, lam = self._gains[3 + i]
            dxh1, dxh2 = hgo_derivative(w.xh1, w.xh2, b1, b2, eps, pos_meas[i],
                                        f_pos[i], 0.0)
            dgm = do_derivative(w.gamma, lam, w.fb2, 0.0, 1.0, f_do[i])
            deriv[w.base:w.base + RIG_SIZE] = (w.dz1, w.dz2, w.dsigma, dxh1, dxh2, dgm)

        if not collect:
            return deriv
        return StepSignals(
            t=t,
            deriv=deriv,
            refs=(xr, yr, zr, phi_des, theta_des, psi_des),
            inputs=u,
            speeds=tuple(mix.speeds),
            clamped=mix.clamped,
            virtuals=(ux, uy, uz),
            disturbances=d_now,
            dhat=(att[0].dhat, att[1].dhat, att[2].dhat,
                  pos[0].dhat, pos[1].dhat, pos[2].dhat),
            errors=(x7 - xr, x9 - yr, x11 - zr,
                    x1 - phi_des, x3 - theta_des, x5 - psi_des),
            estimates=(att[0].xh1, att[0].xh2, att[1].xh1, att[1].xh2,
                       att[2].xh1, att[2].xh2, pos[0].xh1, pos[0].xh2,
                       pos[1].xh1, pos[1].xh2, pos[2].xh1, pos[2].xh2),
            omega_r=omega_final,
        )


def rk4_step(f, a, t, dt, k1=None):
    """One classical fourth-order Runge-Kutta step for da/dt = f(t, a).

    Works for scalar or array states.  k1 may be passed in when f(t, a) is
    already known; the engine reuses the evaluation that produced the log
    row.
    """
    if k1 is None:
        k1 = f(t, a)
    half = 0.5 * dt
    k2 = f(t + half, a + half * k1)
    k3 = f(t + half, a + half * k2)
    k4 = f(t + dt, a + dt * k3)
    return a + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


@dataclass
class SimLog:
    """Full-rate trace; one row per major step, columns as in COLUMNS."""

    columns: Tuple[str, ...]
    data: np.ndarray
    dt: float

    def __len__(self):
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


@dataclass
class Metrics:
    tracking_rmse: dict
    estimation_rmse: dict
    peak_abs_error: dict
    settle_time: dict
    window: Tuple[float, float]
    clamp_events: int = 0
    guard_events: int = 0
    completed: bool = True
    abort: Optional[dict] = None


class RunResult(NamedTuple):
    log: SimLog
    metrics: Metrics


# Tracking-error column and (estimate, truth) columns per channel.
_TRACK_COL = {"roll": "e_phi", "pitch": "e_theta", "yaw": "e_psi",
              "x": "e_x", "y": "e_y", "z": "e_z"}
_EST_COLS = {"roll": ("xhat1", "x1"), "pitch": ("xhat3", "x3"), "yaw": ("xhat5", "x5"),
             "x": ("xhat7", "x7"), "y": ("xhat9", "x9"), "z": ("xhat11", "x11")}

# A channel counts as settled once |error| stays below this fraction of its
# peak for the rest of the window.
SETTLE_FRACTION = 0.1


def compute_rmse(log: SimLog, window: Tuple[float, float]) -> Metrics:
    """Per-channel RMSE, peak, and settle time over [t0, t1]."""
    t0, t1 = window
    t = log.data[:, 0]
    mask = (t >= t0) & (t <= t1)
    if not mask.any():
        raise ValueError(f"window {window} selects no samples")
    tw = t[mask]
    tracking_rmse, estimation_rmse, peaks, settle = {}, {}, {}, {}
    for ch in CHANNELS:
        e = log.column(_TRACK_COL[ch])[mask]
        tracking_rmse[ch] = float(np.sqrt(np.mean(e * e)))
        ae = np.abs(e)
        peak = float(ae.max())
        peaks[ch] = peak
        above = np.nonzero(ae > SETTLE_FRACTION * peak)[0]
        if len(above) == 0:
            settle[ch] = float(tw[0])
        elif above[-1] == len(ae) - 1:
            settle[ch] = None
        else:
            settle[ch] = float(tw[above[-1] + 1])
        est_col, truth_col = _EST_COLS[ch]
        r = log.column(est_col)[mask] - log.column(truth_col)[mask]
        estimation_rmse[ch] = float(np.sqrt(np.mean(r * r)))
    return Metrics(tracking_rmse, estimation_rmse, peaks, settle, (float(t0), float(t1)))


def _empty_metrics() -> Metrics:
    nan = float("nan")
    return Metrics(
        {ch: nan for ch in CHANNELS}, {ch: nan for ch in CHANNELS},
        {ch: nan for ch in CHANNELS}, {ch: None for ch in CHANNELS},
        (nan, nan),
    )


def run_scenario(sc: Scenario) -> RunResult:
    """Integrate the scenario from 0 to duration at fixed dt.

    Deterministic given the scenario (seeds included).  A guard violation
    aborts with the partial log and the diagnostic recorded in the metrics;
    no exception escapes for runtime guards.
    """
    sc.validate()
    loop = ClosedLoop(sc)
    dt = sc.dt
    n = int(round(sc.duration / dt))
    data = np.empty((n + 1, len(COLUMNS)))
    a = loop.initial_state()
    clamp_events = 0
    abort = None
    rows = 0
    for i in range(n + 1):
        t = i * dt
        try:
            sig = loop.signals(t, a)
            data[i] = [t, *a[:PLANT_DIM], *sig.estimates, *sig.refs, *sig.inputs,
                       *sig.speeds, *sig.virtuals, *sig.disturbances, *sig.dhat,
                       *sig.errors]
            rows = i + 1
            clamp_events += sig.clamped
            if i == n:
                break
            a = rk4_step(loop.derivative, a, t, dt, k1=sig.deriv)
            if not np.isfinite(a).all():
                raise NonFiniteError(f"state became non-finite during the step at t={t:.6f} s")
        except (AngleGuardError, DenominatorTooSmallError, NonFiniteError) as exc:
            abort = {"reason": type(exc).__name__, "t": t, "detail": str(exc)}
            break
    log = SimLog(columns=COLUMNS, data=data[:rows].copy(), dt=dt)
    if rows:
        metrics = compute_rmse(log, (float(log.data[0, 0]), float(log.data[rows - 1, 0])))
    else:
        metrics = _empty_metrics()
    metrics.clamp_events = clamp_events
    metrics.guard_events = 0 if abort is None else 1
    metrics.completed = abort is None
    metrics.abort = abort
    return RunResult(log, metrics)


def write_trace(log: SimLog, path, decimation: int = 1):
    """CSV trace: header row plus every decimation-th sample, 9 significant digits."""
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            fh.write(",".join(log.columns) + "\n")
            for row in log.data[::decimation]:
                fh.write(",".join(f"{v:.9g}" for v in row) + "\n")
    except OSError as exc:
        raise SimulationError(f"cannot write trace to {path}: {exc}") from exc


def read_trace(path) -> SimLog:
    """Read a trace written by write_trace."""
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().strip()
            body = [line for line in fh if line.strip()]
    except OSError as exc:
        raise SimulationError(f"cannot read trace from {path}: {exc}") from exc
    columns = tuple(header.split(","))
    if body:
        data = np.array([[float(v) for v in line.split(",")] for line in body])
    else:
        data = np.empty((0, len(columns)))
    dt = float(data[1, 0] - data[0, 0]) if data.shape[0] >= 2 else 0.0
    return SimLog(columns=columns, data=data, dt=dt)


def write_summary(metrics: Metrics, sc: Scenario, path) -> dict:
    """JSON run summary embedding the fully resolved scenario and its digest."""
    payload = {
        "schema_version": TRACE_SCHEMA_VERSION,
        "seed": sc.seed,
        "scenario_digest": scenario_digest(sc),
        "scenario": scenario_to_dict(sc),
        "completed": metrics.completed,
        "abort": metrics.abort,
        "guard_events": metrics.guard_events,
        "clamp_events": metrics.clamp_events,
        "window": [metrics.window[0], metrics.window[1]],
        "tracking_rmse": metrics.tracking_rmse,
        "estimation_rmse": metrics.estimation_rmse,
        "peak_abs_error": metrics.peak_abs_error,
        "settle_time": metrics.settle_time,
    }
    path = Path(path)
    try:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise SimulationError(f"cannot write summary to {path}: {exc}") from exc
    return payload
