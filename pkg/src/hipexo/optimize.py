"""In-silico parameter design: fit spring and modulation-sigmoid parameters
by minimizing activity-weighted torque-tracking error plus static-torque and
sign-mismatch penalties over a task battery.

The estimated torque for each task is the spring basis with velocity (and,
for sit-to-stand, torso) modulation replayed open loop over the task's
kinematics; the descent and blending layers stay out of the fitting loop.
The search is a bound-constrained Nelder-Mead simplex with seeded restarts
on stagnation; the returned point is never worse than the warm start.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, minimize

from .controller import ControllerParams
from .gaitdata import CH_HIP_ANGLE, CH_HIP_MOMENT, CH_HIP_VEL, CH_THIGH, CH_TORSO, \
    ActivityLabel, StrideSeries
from .metrics import cosine_similarity
from .springs import (JointSample, gait_torque, gait_torque_series,
                      sts_torque_series)

# tunable scalar surface exposed to the optimizer (basis layer only)
PARAM_PATHS = {
    "k_ext": ("gait", "k_ext"),
    "k_flex": ("gait", "k_flex"),
    "theta_ext_eq": ("gait", "theta_ext_eq"),
    "theta_flex_eq": ("gait", "theta_flex_eq"),
    "w_ext": ("gait", "vel_mod_ext", "w"),
    "phi_ext": ("gait", "vel_mod_ext", "phi"),
    "w_flex": ("gait", "vel_mod_flex", "w"),
    "phi_flex": ("gait", "vel_mod_flex", "phi"),
    "k_sts": ("sts", "k_sts"),
    "w_vel": ("sts", "vel_mod", "w"),
    "phi_vel": ("sts", "vel_mod", "phi"),
    "w_torso": ("sts", "torso_mod", "w"),
    "phi_torso": ("sts", "torso_mod", "phi"),
}

DEFAULT_FREE = ("w_ext", "phi_ext", "w_flex", "phi_flex",
                "theta_ext_eq", "theta_flex_eq")


def get_param(params: ControllerParams, name: str) -> float:
    obj = params
    for attr in PARAM_PATHS[name]:
        obj = getattr(obj, attr)
    return float(obj)


def set_param(params: ControllerParams, name: str, value: float):
    path = PARAM_PATHS[name]
    obj = params
    for attr in path[:-1]:
        obj = getattr(obj, attr)
    setattr(obj, path[-1], float(value))


def apply_vector(base: ControllerParams, names, values) -> ControllerParams:
    """Copy of ``base`` with the named parameters replaced; frozen entries
    keep the base values bit-exactly."""
    out = copy.deepcopy(base)
    for name, value in zip(names, values):
        set_param(out, name, value)
    # re-run validation on the rebuilt spring params
    out.gait.__post_init__()
    out.sts.__post_init__()
    return out


@dataclass
class TaskSet:
    label: ActivityLabel
    strides: list[StrideSeries]
    weight: float = 1.0


@dataclass
class ObjectiveSpec:
    """Tracking tasks, penalty weights, free-parameter mask, and box bounds.

    target_scale converts the mass-normalized biological moment (Nm/kg) into
    the torque target (Nm) the springs are fit against; the hardware level
    of assistance is a separate, later scaling.
    """

    tasks: list[TaskSet]
    c_static: float = 0.05
    c_sign: float = 1.0
    free: tuple = DEFAULT_FREE
    bounds: dict = field(default_factory=dict)
    target_scale: float = 20.0   # Nm per Nm/kg
    sign_mask_frac: float = 0.05

    def __post_init__(self):
        if not self.tasks:
            raise ValueError("at least one task required")
        if self.c_static < 0 or self.c_sign < 0:
            raise ValueError("penalty weights must be >= 0")
        for t in self.tasks:
            if not np.isfinite(t.weight) or t.weight < 0:
                raise ValueError(f"bad weight for {t.label.code}")
        for name in self.free:
            if name not in PARAM_PATHS:
                raise ValueError(f"unknown free parameter {name!r}")
            lo, hi = self.bounds.get(name, (None, None))
            if lo is None or hi is None:
                raise ValueError(f"missing bounds for free parameter {name!r}")
            if not lo < hi:
                raise ValueError(f"bounds for {name!r} not ordered: {lo} >= {hi}")


@dataclass
class OptResult:
    best_params: ControllerParams
    best_objective: float
    trace: list            # (eval_count, best_objective_so_far) at improvements
    per_task_sim: dict     # task code -> SIM at the optimum
    n_evals: int
    reason: str


class _Evaluator:
    """Precompiled objective over the task battery."""

    def __init__(self, spec: ObjectiveSpec, base: ControllerParams):
        self.spec = spec
        self.base = base
        self.names = tuple(spec.free)
        self.lo = np.array([spec.bounds[n][0] for n in self.names])
        self.hi = np.array([spec.bounds[n][1] for n in self.names])
        self._tasks = []
        for t in spec.tasks:
            theta = np.concatenate([s.channels[CH_HIP_ANGLE] for s in t.strides])
            omega = np.concatenate([s.channels[CH_HIP_VEL] for s in t.strides])
            thigh = np.concatenate([s.channels[CH_THIGH] for s in t.strides])
            torso = np.concatenate([s.channels[CH_TORSO] for s in t.strides])
            target = spec.target_scale * np.concatenate(
                [s.channels[CH_HIP_MOMENT] for s in t.strides])
            mask = np.abs(target) > spec.sign_mask_frac * np.max(np.abs(target))
            self._tasks.append((t, theta, omega, thigh, torso, target, mask))

    def x0(self) -> np.ndarray:
        return np.array([get_param(self.base, n) for n in self.names])

    def check_bounds(self, x):
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise ValueError("parameters outside bounds")

    def params_at(self, x) -> ControllerParams:
        return apply_vector(self.base, self.names, x)

    def tau_est(self, params: ControllerParams, task: TaskSet,
                theta, omega, thigh, torso) -> np.ndarray:
        if task.label.is_gait:
            return gait_torque_series(theta, omega, params.gait)
        return sts_torque_series(thigh, omega, torso, params.sts)

    def value(self, x) -> float:
        params = self.params_at(x)
        total = 0.0
        sign_term = 0.0
        for task, theta, omega, thigh, torso, target, mask in self._tasks:
            est = self.tau_est(params, task, theta, omega, thigh, torso)
            err = est - target
            total += task.weight * float(np.mean(err * err))
            if mask.any():
                hinge = np.maximum(0.0, -est[mask] * np.sign(target[mask]))
                sign_term += float(np.mean(hinge))
        static = gait_torque(JointSample(0.0, 0.0, 0.0, 0.0), params.gait)
        total += self.spec.c_static * static * static
        total += self.spec.c_sign * sign_term
        return total

    def similarities(self, params: ControllerParams) -> dict:
        sims = {}
        for task, theta, omega, thigh, torso, target, _ in self._tasks:
            est = self.tau_est(params, task, theta, omega, thigh, torso)
            sims[task.label.code] = cosine_similarity(est, target)
        return sims


def objective(params: ControllerParams, spec: ObjectiveSpec) -> float:
    """Activity-weighted tracking MSE + static-torque and sign penalties.

    Raises ``ValueError`` when the free parameters sit outside the bounds.
    """
    ev = _Evaluator(spec, params)
    x = ev.x0()
    ev.check_bounds(x)
    return ev.value(x)


def report_similarity(params: ControllerParams, tasks: list[TaskSet],
                      target_scale: float = 20.0) -> dict:
    """Per-task cosine similarity of the replayed estimated torque against
    the biological moment target."""
    if not tasks:
        raise ValueError("tasks must be non-empty")
    bounds = {n: (-1e9, 1e9) for n in DEFAULT_FREE}
    spec = ObjectiveSpec(tasks=tasks, bounds=bounds, target_scale=target_scale)
    return _Evaluator(spec, params).similarities(params)


def format_sim_table(sims: dict) -> str:
    """Two-column activity/SIM grid."""
    items = list(sims.items())
    half = (len(items) + 1) // 2
    lines = [f"{'Activity':<10} {'SIM':>8}   {'Activity':<10} {'SIM':>8}",
             "-" * 42]
    for i in range(half):
        left = f"{items[i][0]:<10} {items[i][1]:>8.4f}"
        if i + half < len(items):
            right = f"{items[i + half][0]:<10} {items[i + half][1]:>8.4f}"
            lines.append(f"{left}   {right}")
        else:
            lines.append(left)
    return "\n".join(lines)


class _BudgetExhausted(Exception):
    pass


def optimize(spec: ObjectiveSpec, warm_start: ControllerParams, budget: int,
             seed: int = 0, restart_scale: float = 0.05,
             max_stagnant_restarts: int = 2) -> OptResult:
    """Bound-constrained derivative-free search from a warm start.

    Nelder-Mead with box bounds, restarted from seeded perturbations of the
    incumbent when progress stalls. Deterministic for a given seed; the
    result is never worse than the warm start, and frozen parameters pass
    through bit-exactly.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    ev = _Evaluator(spec, warm_start)
    x0 = ev.x0()
    ev.check_bounds(x0)

    state = {"n": 0, "best_f": np.inf, "best_x": x0.copy(), "trace": []}

    def f(x):
        if state["n"] >= budget:
            raise _BudgetExhausted
        state["n"] += 1
        val = ev.value(x)
        if val < state["best_f"]:
            state["best_f"] = val
            state["best_x"] = np.array(x, dtype=float)
            state["trace"].append((state["n"], val))
        return val

    f(x0)
    reason = "budget exhausted"
    if budget > 1:
        rng = np.random.default_rng(seed)
        bounds = Bounds(ev.lo, ev.hi)
        span = ev.hi - ev.lo
        x_start = x0
        stagnant = 0
        while state["n"] < budget:
            f_before = state["best_f"]
            try:
                minimize(f, x_start, method="Nelder-Mead", bounds=bounds,
                         options={"maxfev": budget - state["n"],
                                  "xatol": 1e-10, "fatol": 1e-14})
            except _BudgetExhausted:
                break
            rel_gain = (f_before - state["best_f"]) / max(abs(f_before), 1e-30)
            stagnant = stagnant + 1 if rel_gain < 1e-9 else 0
            if stagnant > max_stagnant_restarts:
                reason = "converged (stagnant restarts)"
                break
            x_start = np.clip(
                state["best_x"] + rng.uniform(-1.0, 1.0, x0.size)
                * restart_scale * span,
                ev.lo, ev.hi)
    else:
        reason = "budget of one evaluation"

    best_params = ev.params_at(state["best_x"])
    return OptResult(
        best_params=best_params,
        best_objective=state["best_f"],
        trace=state["trace"],
        per_task_sim=ev.similarities(best_params),
        n_evals=state["n"],
        reason=reason,
    )
