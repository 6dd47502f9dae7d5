"""Stride replay through the controller runtime.

A normalized stride is unrolled into sensor frames at the control rate
(cyclically for gait, once with a seated lead-in for sit-to-stand), stepped
through a fresh controller, and the commanded torque of the last full cycle
is mapped back onto the stride grid as the exo_torque channel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ControllerParams, HipController, SensorFrame
from .gaitdata import (CH_HIP_ANGLE, CH_HIP_VEL, CH_PELVIS_ACC, CH_THIGH,
                       CH_THIGH_ACC, CH_TORSO, StrideSeries)

BREAKDOWN_FIELDS = ("tau_ext", "tau_flex", "tau_gait", "tau_gait_mod",
                    "tau_sts", "tau_sts_mod", "tau_act_raw", "tau_cmd",
                    "eta_ext", "eta_flex", "alpha", "beta",
                    "extension_scale", "hip_vel_filt")


@dataclass
class ReplayLog:
    """Left-side (ipsilateral) step log of one stride replay."""

    t: np.ndarray
    phase: np.ndarray          # cycle fraction in [0, 1)
    series: dict               # breakdown field -> per-step array
    events: list
    exo_torque_grid: np.ndarray  # tau_cmd of the measured cycle on the stride grid
    mean_extension_scale: float
    stride: StrideSeries


def _interp_cyclic(stride: StrideSeries, name: str, contra: bool = False):
    grid = np.linspace(0.0, 1.0, stride.n)
    values = stride.contra(name) if contra else stride.channels[name]
    return lambda x: np.interp(x, grid, values)


def replay_stride(params: ControllerParams, stride: StrideSeries,
                  cycles: int = 4, lead_in_s: float | None = None,
                  descent_enabled: bool = True,
                  controller: HipController | None = None) -> ReplayLog:
    """Replay one stride and return the left-side step log.

    The stride's ipsilateral channels drive the left leg, the contralateral
    ones the right. Gait strides loop for ``cycles``; sit-to-stand runs once
    after a lead-in that holds the seated first sample (default 1.5 s).
    The measured cycle (for the exo-torque grid and the mean extension
    scale) is the last one.
    """
    is_gait = stride.label.is_gait
    if not is_gait:
        cycles = 1
        if lead_in_s is None:
            lead_in_s = 1.5
    lead_in_s = lead_in_s or 0.0

    rate = params.loop_rate_hz
    T = stride.cycle_duration
    n_steps = int(round((lead_in_s + cycles * T) * rate))
    tgrid = np.arange(n_steps) / rate

    # cycle phase for each step; lead-in clamps to the first sample
    rel = (tgrid - lead_in_s) / T
    if is_gait:
        phase = np.where(rel < 0.0, 0.0, rel % 1.0)
    else:
        phase = np.clip(rel, 0.0, 1.0)

    channels = {
        "hip_l": _interp_cyclic(stride, CH_HIP_ANGLE),
        "hip_r": _interp_cyclic(stride, CH_HIP_ANGLE, contra=True),
        "vel_l": _interp_cyclic(stride, CH_HIP_VEL),
        "vel_r": _interp_cyclic(stride, CH_HIP_VEL, contra=True),
        "thigh_l": _interp_cyclic(stride, CH_THIGH),
        "thigh_r": _interp_cyclic(stride, CH_THIGH, contra=True),
        "torso": _interp_cyclic(stride, CH_TORSO),
    }
    sampled = {k: fn(phase) for k, fn in channels.items()}
    if CH_THIGH_ACC in stride.channels:
        sampled["acc_l"] = _interp_cyclic(stride, CH_THIGH_ACC)(phase)
        sampled["acc_r"] = _interp_cyclic(stride, CH_THIGH_ACC, contra=True)(phase)
    else:
        sampled["acc_l"] = np.zeros(n_steps)
        sampled["acc_r"] = np.zeros(n_steps)
    if CH_PELVIS_ACC in stride.channels:
        sampled["acc_p"] = _interp_cyclic(stride, CH_PELVIS_ACC)(phase)
    else:
        sampled["acc_p"] = np.zeros(n_steps)
    # lead-in is a quiet hold: no acceleration transients
    lead = tgrid < lead_in_s
    for k in ("acc_l", "acc_r", "acc_p"):
        sampled[k] = np.where(lead, 0.0, sampled[k])
    # velocity is zero while holding the first sample
    sampled["vel_l"] = np.where(lead, 0.0, sampled["vel_l"])
    sampled["vel_r"] = np.where(lead, 0.0, sampled["vel_r"])

    ctl = controller or HipController(params, descent_enabled=descent_enabled)
    series = {name: np.empty(n_steps) for name in BREAKDOWN_FIELDS}
    events = []
    for i in range(n_steps):
        frame = SensorFrame(
            timestamp=tgrid[i],
            hip_angle_l=sampled["hip_l"][i], hip_angle_r=sampled["hip_r"][i],
            hip_vel_l=sampled["vel_l"][i], hip_vel_r=sampled["vel_r"][i],
            thigh_angle_l=sampled["thigh_l"][i],
            thigh_angle_r=sampled["thigh_r"][i],
            torso_angle=sampled["torso"][i],
            thigh_accel_l=sampled["acc_l"][i],
            thigh_accel_r=sampled["acc_r"][i],
            pelvis_accel=sampled["acc_p"][i],
        )
        result = ctl.step(frame)
        for name in BREAKDOWN_FIELDS:
            series[name][i] = getattr(result.left, name)
        if result.hs_event is not None:
            events.append(result.hs_event)

    # map the measured (last) cycle's command back onto the stride grid
    t_meas0 = lead_in_s + (cycles - 1) * T
    grid_t = t_meas0 + np.linspace(0.0, 1.0, stride.n) * T
    grid_t = np.minimum(grid_t, tgrid[-1])
    exo_grid = np.interp(grid_t, tgrid, series["tau_cmd"])

    meas = tgrid >= t_meas0
    mean_scale = float(np.mean(series["extension_scale"][meas]))

    return ReplayLog(t=tgrid, phase=phase, series=series, events=events,
                     exo_torque_grid=exo_grid, mean_extension_scale=mean_scale,
                     stride=stride)


def simulate_task(params: ControllerParams, strides: list[StrideSeries],
                  cycles: int = 4, descent_enabled: bool = True):
    """Replay every stride of one task.

    Returns (assisted_strides, logs): copies of the input strides with the
    exo_torque channel attached and condition set to 'assisted', plus the
    per-stride replay logs.
    """
    assisted = []
    logs = []
    for stride in strides:
        log = replay_stride(params, stride, cycles=cycles,
                            descent_enabled=descent_enabled)
        out = stride.copy_with(exo_torque=log.exo_torque_grid)
        out.condition = "assisted"
        assisted.append(out)
        logs.append(log)
    return assisted, logs
