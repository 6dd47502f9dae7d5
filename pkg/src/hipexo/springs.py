"""Physics-informed torque bases: unidirectional gait extension/flexion
springs and the sit-to-stand (STS) spring, each shaped by sigmoid velocity
(and torso) modulation.

Sign conventions: hip flexion is positive, so extension torque is negative
and flexion torque positive. Angles in rad, velocities in rad/s, torques in
Nm. All operations are pure functions of (sample, params).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import SigmoidParams, sigmoid, sigmoid_array

# joint range-of-motion sanity bound for equilibrium angles, rad
ROM_MIN = -1.0
ROM_MAX = 2.2

# hip angular velocity sanity bound, rad/s
VEL_BOUND = 25.0


@dataclass
class GaitSpringParams:
    """Gait extension/flexion spring stiffnesses, equilibria, and the
    velocity-modulation sigmoids for each spring."""

    k_ext: float          # Nm/rad
    k_flex: float         # Nm/rad
    theta_ext_eq: float   # rad
    theta_flex_eq: float  # rad
    vel_mod_ext: SigmoidParams
    vel_mod_flex: SigmoidParams

    def __post_init__(self):
        if self.k_ext < 0 or self.k_flex < 0:
            raise ValueError("spring stiffnesses must be >= 0")
        for name, eq in (("theta_ext_eq", self.theta_ext_eq),
                         ("theta_flex_eq", self.theta_flex_eq)):
            if not ROM_MIN <= eq <= ROM_MAX:
                raise ValueError(
                    f"{name}={eq} rad outside joint range [{ROM_MIN}, {ROM_MAX}]"
                )


@dataclass
class StsSpringParams:
    """STS spring stiffness plus velocity and torso-lean modulation sigmoids.

    The spring is unidirectional with its equilibrium at thigh angle 0, so it
    produces extension torque only while the thigh is flexed.
    """

    k_sts: float  # Nm/rad
    vel_mod: SigmoidParams
    torso_mod: SigmoidParams

    def __post_init__(self):
        if self.k_sts < 0:
            raise ValueError("k_sts must be >= 0")


@dataclass
class JointSample:
    """One side's kinematic inputs to the basis layer (flexion positive)."""

    theta_ips: float       # hip angle, rad
    theta_ips_dot: float   # hip angular velocity, rad/s
    theta_thigh: float     # thigh angle, rad
    theta_torso: float     # torso angle, rad (forward lean positive)

    def __post_init__(self):
        vals = (self.theta_ips, self.theta_ips_dot, self.theta_thigh, self.theta_torso)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("joint sample must be finite")
        if abs(self.theta_ips_dot) >= VEL_BOUND:
            raise ValueError(f"|hip velocity| >= {VEL_BOUND} rad/s fails sanity bound")


def gait_spring_torques(s: JointSample, p: GaitSpringParams) -> tuple[float, float]:
    """Unmodulated gait spring torques (tau_ext <= 0, tau_flex >= 0).

    The min/max clamps keep each spring unidirectional: the extension spring
    never pushes into flexion and vice versa.
    """
    tau_ext = min(0.0, p.k_ext * (s.theta_ips - p.theta_ext_eq))
    tau_flex = max(0.0, p.k_flex * (p.theta_flex_eq - s.theta_ips))
    return tau_ext, tau_flex


def sts_spring_torque(s: JointSample, p: StsSpringParams) -> float:
    """Unmodulated STS spring torque, <= 0 (extension only while thigh flexed)."""
    return min(0.0, -p.k_sts * s.theta_thigh)


def gait_velocity_factors(s: JointSample, p: GaitSpringParams) -> tuple[float, float]:
    """Velocity modulation factors (eta_ext, eta_flex), each in (0, 1)."""
    eta_ext = sigmoid(s.theta_ips_dot, p.vel_mod_ext)
    eta_flex = sigmoid(s.theta_ips_dot, p.vel_mod_flex)
    return eta_ext, eta_flex


def gait_torque(s: JointSample, p: GaitSpringParams) -> float:
    """Total gait-spring torque after velocity modulation."""
    tau_ext, tau_flex = gait_spring_torques(s, p)
    eta_ext, eta_flex = gait_velocity_factors(s, p)
    return eta_ext * tau_ext + eta_flex * tau_flex


def sts_modulated_torque(s: JointSample, p: StsSpringParams) -> float:
    """STS torque scaled by velocity and torso-lean factors, <= 0.

    The torso input is clamped at zero so that backward lean or an upright
    trunk leaves only the sigmoid's floor value; the spring effectively
    engages when the trunk pitches forward.
    """
    tau_sts = sts_spring_torque(s, p)
    eta_vel = sigmoid(s.theta_ips_dot, p.vel_mod)
    eta_torso = sigmoid(max(0.0, s.theta_torso), p.torso_mod)
    return tau_sts * eta_vel * eta_torso


# --- vectorized twins used by the batch replay / optimizer paths ---------

def gait_torque_series(theta_ips, theta_ips_dot, p: GaitSpringParams) -> np.ndarray:
    """Vectorized gait-spring torque over angle/velocity series."""
    th = np.asarray(theta_ips, dtype=float)
    om = np.asarray(theta_ips_dot, dtype=float)
    tau_ext = np.minimum(0.0, p.k_ext * (th - p.theta_ext_eq))
    tau_flex = np.maximum(0.0, p.k_flex * (p.theta_flex_eq - th))
    return (sigmoid_array(om, p.vel_mod_ext) * tau_ext
            + sigmoid_array(om, p.vel_mod_flex) * tau_flex)


def sts_torque_series(theta_thigh, theta_ips_dot, theta_torso,
                      p: StsSpringParams) -> np.ndarray:
    """Vectorized modulated STS torque over thigh/velocity/torso series."""
    th = np.asarray(theta_thigh, dtype=float)
    om = np.asarray(theta_ips_dot, dtype=float)
    to = np.asarray(theta_torso, dtype=float)
    tau_sts = np.minimum(0.0, -p.k_sts * th)
    return (tau_sts
            * sigmoid_array(om, p.vel_mod)
            * sigmoid_array(np.maximum(0.0, to), p.torso_mod))
