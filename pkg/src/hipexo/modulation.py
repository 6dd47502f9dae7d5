"""Task-context modulation layer.

Descent attenuation: at each heel strike the inter-thigh angle difference is
mapped through a sigmoid to an attenuation factor alpha in [0, 1]; alpha is
latched until the next heel strike or until a standing-reset ramp clears it.
Only extension torque is attenuated.

Gait-STS blending: bilateral symmetry (plus a velocity-difference gate and a
seated override) yields beta in [0, 1], smoothed by an EMA; the commanded
torque is the convex combination beta*tau_sts_mod + (1-beta)*tau_gait_mod.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .signals import EmaState, SigmoidParams, ema_step, sigmoid


@dataclass
class BilateralSample:
    """Bilateral thigh state at one instant; theta_diff = left - right."""

    theta_thigh_l: float
    theta_thigh_r: float
    theta_diff: float      # rad
    theta_diff_dot: float  # rad/s
    timestamp: float       # s

    def __post_init__(self):
        expected = self.theta_thigh_l - self.theta_thigh_r
        if abs(self.theta_diff - expected) > 1e-9:
            raise ValueError(
                "theta_diff must equal theta_thigh_l - theta_thigh_r "
                f"(got {self.theta_diff}, expected {expected})"
            )

    @classmethod
    def from_thighs(cls, theta_thigh_l, theta_thigh_r, theta_diff_dot, timestamp):
        return cls(theta_thigh_l, theta_thigh_r,
                   theta_thigh_l - theta_thigh_r, theta_diff_dot, timestamp)


@dataclass
class DescentModParams:
    """Descent attenuation configuration.

    step_mod must have a negative slope so a smaller step (inter-thigh angle
    difference at heel strike) yields stronger attenuation. lam scales the
    attenuation strength; the thigh range is a safeguard that disables
    attenuation when heel-strike thigh angles look like non-descent activity.
    """

    step_mod: SigmoidParams
    lam: float = 1.0          # attenuation strength in [0, 1]
    thigh_min: float = -0.35  # rad
    thigh_max: float = 0.9    # rad
    t_wait: float = 2.0       # s of sustained standing before the reset ramp
    t_decay: float = 1.0      # s to ramp alpha back to 0

    def __post_init__(self):
        if self.step_mod.w >= 0:
            raise ValueError("step_mod slope must be negative "
                             "(attenuation grows as the step shrinks)")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must be in [0, 1]")
        if not self.thigh_min < self.thigh_max:
            raise ValueError("thigh_min must be < thigh_max")
        if self.t_wait <= 0 or self.t_decay <= 0:
            raise ValueError("t_wait and t_decay must be > 0")


@dataclass
class SymmetryParams:
    """Gait-STS blend configuration.

    sym_mod must have negative slope and offset so symmetry (small
    inter-thigh difference) raises beta. The velocity gate zeroes beta while
    the legs move asymmetrically; the seated override forces beta = 1 when
    both thighs are flexed past the seated threshold.
    """

    sym_mod: SigmoidParams
    vel_threshold: float           # rad/s
    seated_ext_threshold: float = 1.0  # rad
    ema_smoothing: float = 0.1

    def __post_init__(self):
        if self.sym_mod.w >= 0 or self.sym_mod.phi >= 0:
            raise ValueError("sym_mod slope and offset must be negative")
        if not self.vel_threshold > 0:
            raise ValueError("vel_threshold must be > 0")
        if not 0.0 < self.ema_smoothing <= 1.0:
            raise ValueError("ema_smoothing must be in (0, 1]")


@dataclass
class ModulationState:
    """Per-leg persistent modulation state, owned by the controller runtime."""

    alpha: float = 0.0
    beta_ema: EmaState = field(default_factory=lambda: EmaState(smoothing=0.1))
    standing_since: float | None = None
    ramp_start: float | None = None
    ramp_initial_alpha: float = 0.0

    @property
    def beta_filtered(self) -> float:
        return self.beta_ema.value

    def latch_alpha(self, alpha: float):
        """Store a heel-strike alpha and cancel any running reset ramp."""
        self.alpha = alpha
        self.ramp_start = None
        self.standing_since = None

    def reset(self):
        self.alpha = 0.0
        self.beta_ema.value = 0.0
        self.standing_since = None
        self.ramp_start = None
        self.ramp_initial_alpha = 0.0


def alpha_at_heelstrike(hs: BilateralSample, p: DescentModParams) -> float:
    """Descent attenuation factor from the heel-strike thigh snapshot.

    Returns 0 when either thigh angle is outside the safeguard range
    (heel strikes with large flexion or extension are non-descent activity);
    otherwise sigmoid(|theta_diff|).
    """
    if not (p.thigh_min <= hs.theta_thigh_l <= p.thigh_max
            and p.thigh_min <= hs.theta_thigh_r <= p.thigh_max):
        return 0.0
    return sigmoid(abs(hs.theta_diff), p.step_mod)


def attenuate_extension(tau_gait: float, state: ModulationState,
                        p: DescentModParams) -> float:
    """Scale only the extension (negative) part of the gait torque by
    1 - lam*alpha; flexion passes through unchanged."""
    scale = 1.0 - p.lam * state.alpha
    return scale * min(0.0, tau_gait) + max(0.0, tau_gait)


def reset_tick(state: ModulationState, standing: bool, now: float,
               p: DescentModParams) -> float:
    """Advance the standing-reset ramp by one control step.

    Once standing has persisted for t_wait, alpha ramps linearly from its
    latched value to exactly 0 over t_decay. Losing the standing indicator
    freezes alpha where it is; a new heel strike re-latches it (see
    ``ModulationState.latch_alpha``). Returns the updated alpha.
    """
    if standing:
        if state.standing_since is None:
            state.standing_since = now
        if (state.ramp_start is None and state.alpha > 0.0
                and now - state.standing_since >= p.t_wait):
            # anchor the ramp at onset + t_wait so its endpoint lands at
            # onset + t_wait + t_decay regardless of tick phase
            state.ramp_start = state.standing_since + p.t_wait
            state.ramp_initial_alpha = state.alpha
        if state.ramp_start is not None:
            frac = (now - state.ramp_start) / p.t_decay
            state.alpha = max(0.0, state.ramp_initial_alpha * (1.0 - frac))
            if state.alpha == 0.0:
                state.ramp_start = None
                state.ramp_initial_alpha = 0.0
    else:
        state.standing_since = None
        state.ramp_start = None
    return state.alpha


def beta_raw(s: BilateralSample, p: SymmetryParams) -> float:
    """Unfiltered gait-STS blend factor in [0, 1].

    Seated override first: both thighs flexed past the seated threshold
    forces 1 regardless of the velocity gate. Otherwise the symmetry sigmoid
    gated to zero whenever |theta_diff_dot| >= vel_threshold (boundary tie
    closes the gate).
    """
    if (s.theta_thigh_l > p.seated_ext_threshold
            and s.theta_thigh_r > p.seated_ext_threshold):
        return 1.0
    if abs(s.theta_diff_dot) >= p.vel_threshold:
        return 0.0
    return sigmoid(abs(s.theta_diff), p.sym_mod)


def beta_smoothed(state: ModulationState, beta: float) -> float:
    """EMA-filtered blend factor, stored in the state."""
    return ema_step(state.beta_ema, beta)


def blend(tau_sts_mod: float, tau_gait_mod: float, beta: float) -> float:
    """Convex combination beta*tau_sts_mod + (1-beta)*tau_gait_mod."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    return beta * tau_sts_mod + (1.0 - beta) * tau_gait_mod
