"""Fixed-rate bilateral controller runtime.

Per-step pipeline for each leg: velocity low-pass (10 Hz) -> spring torque
bases -> heel-strike detection and descent attenuation -> symmetry blend ->
command low-pass (5 Hz) -> symmetric torque limit. The controller holds all
per-leg state (filters, modulation, detector) and is fully deterministic:
identical frame sequences produce bit-identical breakdown sequences.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

from .heelstrike import LEFT, RIGHT, HsDetector, HsEvent, ImuFrame
from .modulation import (BilateralSample, DescentModParams, ModulationState,
                         SymmetryParams, alpha_at_heelstrike,
                         attenuate_extension, beta_raw, beta_smoothed, blend,
                         reset_tick)
from .signals import BiquadSpec, EmaState, LowpassFilter, clamp
from .springs import (VEL_BOUND, GaitSpringParams, JointSample,
                      StsSpringParams, gait_spring_torques,
                      gait_velocity_factors, sts_modulated_torque,
                      sts_spring_torque)


@dataclass
class ControllerParams:
    """Every tunable of the controller plus the runtime constants."""

    gait: GaitSpringParams
    sts: StsSpringParams
    descent: DescentModParams
    symmetry: SymmetryParams
    torque_limit: float = 22.0        # Nm, symmetric command clamp
    loop_rate_hz: float = 250.0
    vel_filter_cutoff_hz: float = 10.0
    cmd_filter_cutoff_hz: float = 5.0
    standing_beta: float = 0.9        # smoothed beta above this counts as standing
    fault_hold_s: float = 0.2         # hold last command this long on bad frames
    fault_decay_s: float = 0.2        # then decay it linearly to zero

    def __post_init__(self):
        if not self.torque_limit > 0:
            raise ValueError("torque_limit must be > 0")
        nyq = self.loop_rate_hz / 2.0
        if not (0 < self.vel_filter_cutoff_hz < nyq
                and 0 < self.cmd_filter_cutoff_hz < nyq):
            raise ValueError("filter cutoffs must lie below loop_rate_hz / 2")


@dataclass
class SensorFrame:
    """One control-rate sample of bilateral kinematics and IMU accelerations."""

    timestamp: float
    hip_angle_l: float      # rad, flexion positive
    hip_angle_r: float
    hip_vel_l: float        # rad/s
    hip_vel_r: float
    thigh_angle_l: float    # rad
    thigh_angle_r: float
    torso_angle: float      # rad, forward lean positive
    thigh_accel_l: float = 0.0   # m/s^2, thigh-normal
    thigh_accel_r: float = 0.0
    pelvis_accel: float = 0.0    # m/s^2, high-pass residual magnitude

    def is_finite(self) -> bool:
        return all(math.isfinite(getattr(self, f.name)) for f in fields(self))


@dataclass
class TorqueBreakdown:
    """Per-step, per-side decomposition of the command pipeline."""

    tau_ext: float = 0.0
    tau_flex: float = 0.0
    tau_gait: float = 0.0
    tau_gait_mod: float = 0.0
    tau_sts: float = 0.0
    tau_sts_mod: float = 0.0
    tau_act_raw: float = 0.0
    tau_cmd: float = 0.0
    eta_ext: float = 0.0
    eta_flex: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    extension_scale: float = 1.0
    hip_vel_filt: float = 0.0
    fault: bool = False


@dataclass
class StepResult:
    timestamp: float
    left: TorqueBreakdown
    right: TorqueBreakdown
    hs_event: HsEvent | None = None


# stable column order for binary-exact step logging
LOG_COLUMNS = (
    "timestamp", "side", "tau_ext", "tau_flex", "tau_gait", "tau_gait_mod",
    "tau_sts", "tau_sts_mod", "tau_act_raw", "tau_cmd", "eta_ext", "eta_flex",
    "alpha", "beta", "extension_scale", "hip_vel_filt", "fault",
)


def breakdown_rows(result: StepResult):
    """Two CSV rows (left, right) for one step, floats via repr for exact
    round-trips."""
    rows = []
    for side, bd in ((LEFT, result.left), (RIGHT, result.right)):
        rows.append([
            repr(result.timestamp), side,
            repr(bd.tau_ext), repr(bd.tau_flex), repr(bd.tau_gait),
            repr(bd.tau_gait_mod), repr(bd.tau_sts), repr(bd.tau_sts_mod),
            repr(bd.tau_act_raw), repr(bd.tau_cmd), repr(bd.eta_ext),
            repr(bd.eta_flex), repr(bd.alpha), repr(bd.beta),
            repr(bd.extension_scale), repr(bd.hip_vel_filt),
            "1" if bd.fault else "0",
        ])
    return rows


def write_step_log(path, results: list, header_lines=None):
    """Binary-exact bilateral step log: two rows per step in LOG_COLUMNS
    order, floats via repr."""
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for result in results:
            writer.writerows(breakdown_rows(result))


def read_step_log(path) -> list:
    """Reload a step log as (timestamp, side, TorqueBreakdown) tuples; the
    float fields reproduce the logged values bit-exactly."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(r for r in fh if not r.startswith("#"))
        header = next(reader)
        for row in reader:
            rec = dict(zip(header, row))
            bd = TorqueBreakdown(
                **{k: float(rec[k]) for k in header
                   if k not in ("timestamp", "side", "fault")},
                fault=rec["fault"] == "1")
            out.append((float(rec["timestamp"]), rec["side"], bd))
    return out


class _SideState:
    def __init__(self, params: ControllerParams):
        self.vel_filter = LowpassFilter(
            BiquadSpec(params.vel_filter_cutoff_hz, params.loop_rate_hz))
        self.cmd_filter = LowpassFilter(
            BiquadSpec(params.cmd_filter_cutoff_hz, params.loop_rate_hz))
        self.mod = ModulationState(
            beta_ema=EmaState(smoothing=params.symmetry.ema_smoothing))
        self.last_cmd = 0.0


class HipController:
    """Bilateral hip controller stepped at the loop rate by a single owner.

    Parameters
    ----------
    params : ControllerParams
    descent_enabled : bool, optional
        When False the descent attenuation factor is pinned at 0 (used for
        paired ablation replays); everything else runs identically.
    """

    def __init__(self, params: ControllerParams, descent_enabled: bool = True):
        self.params = params
        self.descent_enabled = descent_enabled
        self.reset()

    def reset(self):
        """Zero all filter, modulation, and detector state."""
        self._sides = {LEFT: _SideState(self.params), RIGHT: _SideState(self.params)}
        self.detector = HsDetector(self.params.loop_rate_hz)
        self._t_prev: float | None = None
        self._fault_since: float | None = None

    # -- fault path --------------------------------------------------------

    def _fault_step(self, timestamp: float) -> StepResult:
        p = self.params
        if math.isfinite(timestamp):
            t = timestamp
        else:
            t = (self._t_prev + 1.0 / p.loop_rate_hz) if self._t_prev is not None else 0.0
        if self._fault_since is None:
            self._fault_since = t
        elapsed = t - self._fault_since
        if elapsed <= p.fault_hold_s:
            scale = 1.0
        else:
            scale = max(0.0, 1.0 - (elapsed - p.fault_hold_s) / p.fault_decay_s)
        result = StepResult(timestamp=t, left=TorqueBreakdown(fault=True),
                            right=TorqueBreakdown(fault=True))
        for side, bd in ((LEFT, result.left), (RIGHT, result.right)):
            bd.tau_cmd = self._sides[side].last_cmd * scale
        self._t_prev = t
        return result

    # -- nominal path ------------------------------------------------------

    def step(self, frame: SensorFrame) -> StepResult:
        """Process one sensor frame and return the per-side breakdown.

        Non-finite frames are rejected: the previous command is held (then
        decayed after sustained faults) and the fault flag is raised.
        Timestamp regressions raise ``ValueError``.
        """
        p = self.params
        if (not frame.is_finite()
                or abs(frame.hip_vel_l) >= VEL_BOUND
                or abs(frame.hip_vel_r) >= VEL_BOUND):
            return self._fault_step(frame.timestamp)
        if self._t_prev is not None and frame.timestamp <= self._t_prev:
            raise ValueError(
                f"timestamp regression: {frame.timestamp} after {self._t_prev}")
        self._fault_since = None

        t = frame.timestamp
        # filter overshoot can nudge a near-bound velocity past the sanity
        # limit; saturate rather than reject
        vfilt = {
            LEFT: clamp(self._sides[LEFT].vel_filter.step(frame.hip_vel_l),
                        -VEL_BOUND * 0.999, VEL_BOUND * 0.999),
            RIGHT: clamp(self._sides[RIGHT].vel_filter.step(frame.hip_vel_r),
                         -VEL_BOUND * 0.999, VEL_BOUND * 0.999),
        }
        bilateral = BilateralSample.from_thighs(
            frame.thigh_angle_l, frame.thigh_angle_r,
            vfilt[LEFT] - vfilt[RIGHT], t)

        imu = ImuFrame(frame.thigh_accel_l, frame.thigh_accel_r,
                       frame.pelvis_accel, t)
        event = self.detector.update(imu, bilateral)
        if event is not None and self.descent_enabled:
            self._sides[event.side].mod.latch_alpha(
                alpha_at_heelstrike(event.thigh_snapshot, p.descent))

        b_raw = beta_raw(bilateral, p.symmetry)

        result = StepResult(timestamp=t, left=TorqueBreakdown(),
                            right=TorqueBreakdown(), hs_event=event)
        for side, hip_angle, thigh_angle in (
            (LEFT, frame.hip_angle_l, frame.thigh_angle_l),
            (RIGHT, frame.hip_angle_r, frame.thigh_angle_r),
        ):
            st = self._sides[side]
            beta = beta_smoothed(st.mod, b_raw)
            reset_tick(st.mod, beta > p.standing_beta, t, p.descent)

            sample = JointSample(hip_angle, vfilt[side], thigh_angle,
                                 frame.torso_angle)
            tau_ext, tau_flex = gait_spring_torques(sample, p.gait)
            eta_ext, eta_flex = gait_velocity_factors(sample, p.gait)
            tau_gait = eta_ext * tau_ext + eta_flex * tau_flex
            tau_sts = sts_spring_torque(sample, p.sts)
            tau_sts_mod = sts_modulated_torque(sample, p.sts)

            tau_gait_mod = attenuate_extension(tau_gait, st.mod, p.descent)
            tau_act_raw = blend(tau_sts_mod, tau_gait_mod, beta)
            tau_cmd = clamp(st.cmd_filter.step(tau_act_raw),
                            -p.torque_limit, p.torque_limit)
            st.last_cmd = tau_cmd

            bd = result.left if side == LEFT else result.right
            bd.tau_ext = tau_ext
            bd.tau_flex = tau_flex
            bd.tau_gait = tau_gait
            bd.tau_gait_mod = tau_gait_mod
            bd.tau_sts = tau_sts
            bd.tau_sts_mod = tau_sts_mod
            bd.tau_act_raw = tau_act_raw
            bd.tau_cmd = tau_cmd
            bd.eta_ext = eta_ext
            bd.eta_flex = eta_flex
            bd.alpha = st.mod.alpha
            bd.beta = beta
            bd.extension_scale = 1.0 - p.descent.lam * st.mod.alpha
            bd.hip_vel_filt = vfilt[side]

        self._t_prev = t
        return result
