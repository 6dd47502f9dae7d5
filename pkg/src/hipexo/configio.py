"""Controller parameter files.

YAML in/out with degree-valued angle fields (``*_deg``, ``*_deg_s``) at the
boundary; everything is radians internally. Sigmoid slopes and offsets are
stored as-is.
"""
from __future__ import annotations

import math
from importlib import resources

import yaml

from .controller import ControllerParams
from .modulation import DescentModParams, SymmetryParams
from .signals import SigmoidParams
from .springs import GaitSpringParams, StsSpringParams

DEG = math.pi / 180.0


def params_from_dict(cfg: dict) -> ControllerParams:
    g = cfg["gait"]
    s = cfg["sts"]
    d = cfg["descent"]
    y = cfg["symmetry"]
    r = cfg.get("runtime", {})
    return ControllerParams(
        gait=GaitSpringParams(
            k_ext=float(g["k_ext"]),
            k_flex=float(g["k_flex"]),
            theta_ext_eq=float(g["theta_ext_eq_deg"]) * DEG,
            theta_flex_eq=float(g["theta_flex_eq_deg"]) * DEG,
            vel_mod_ext=SigmoidParams(float(g["w_ext"]), float(g["phi_ext"])),
            vel_mod_flex=SigmoidParams(float(g["w_flex"]), float(g["phi_flex"])),
        ),
        sts=StsSpringParams(
            k_sts=float(s["k_sts"]),
            vel_mod=SigmoidParams(float(s["w_vel"]), float(s["phi_vel"])),
            torso_mod=SigmoidParams(float(s["w_torso"]), float(s["phi_torso"])),
        ),
        descent=DescentModParams(
            step_mod=SigmoidParams(float(d["w_step"]), float(d["phi_step"])),
            lam=float(d.get("lambda", 1.0)),
            thigh_min=float(d.get("thigh_min_deg", -20.0)) * DEG,
            thigh_max=float(d.get("thigh_max_deg", 51.6)) * DEG,
            t_wait=float(d.get("t_wait", 2.0)),
            t_decay=float(d.get("t_decay", 1.0)),
        ),
        symmetry=SymmetryParams(
            sym_mod=SigmoidParams(float(y["w_sc"]), float(y["phi_sc"])),
            vel_threshold=float(y["vel_threshold_deg_s"]) * DEG,
            seated_ext_threshold=float(y.get("seated_threshold_deg", 57.3)) * DEG,
            ema_smoothing=float(y.get("ema_smoothing", 0.1)),
        ),
        torque_limit=float(r.get("torque_limit", 22.0)),
        loop_rate_hz=float(r.get("loop_rate_hz", 250.0)),
        vel_filter_cutoff_hz=float(r.get("vel_filter_cutoff_hz", 10.0)),
        cmd_filter_cutoff_hz=float(r.get("cmd_filter_cutoff_hz", 5.0)),
    )


def params_to_dict(p: ControllerParams) -> dict:
    return {
        "gait": {
            "k_ext": float(p.gait.k_ext),
            "k_flex": float(p.gait.k_flex),
            "theta_ext_eq_deg": p.gait.theta_ext_eq / DEG,
            "theta_flex_eq_deg": p.gait.theta_flex_eq / DEG,
            "w_ext": p.gait.vel_mod_ext.w,
            "phi_ext": p.gait.vel_mod_ext.phi,
            "w_flex": p.gait.vel_mod_flex.w,
            "phi_flex": p.gait.vel_mod_flex.phi,
        },
        "sts": {
            "k_sts": float(p.sts.k_sts),
            "w_vel": p.sts.vel_mod.w,
            "phi_vel": p.sts.vel_mod.phi,
            "w_torso": p.sts.torso_mod.w,
            "phi_torso": p.sts.torso_mod.phi,
        },
        "descent": {
            "w_step": p.descent.step_mod.w,
            "phi_step": p.descent.step_mod.phi,
            "lambda": p.descent.lam,
            "thigh_min_deg": p.descent.thigh_min / DEG,
            "thigh_max_deg": p.descent.thigh_max / DEG,
            "t_wait": p.descent.t_wait,
            "t_decay": p.descent.t_decay,
        },
        "symmetry": {
            "w_sc": p.symmetry.sym_mod.w,
            "phi_sc": p.symmetry.sym_mod.phi,
            "vel_threshold_deg_s": p.symmetry.vel_threshold / DEG,
            "seated_threshold_deg": p.symmetry.seated_ext_threshold / DEG,
            "ema_smoothing": p.symmetry.ema_smoothing,
        },
        "runtime": {
            "torque_limit": p.torque_limit,
            "loop_rate_hz": p.loop_rate_hz,
            "vel_filter_cutoff_hz": p.vel_filter_cutoff_hz,
            "cmd_filter_cutoff_hz": p.cmd_filter_cutoff_hz,
        },
    }


def load_params(path) -> ControllerParams:
    """Load controller parameters; 'default' loads the packaged example
    config produced by the optimizer."""
    if str(path) == "default":
        text = resources.files("hipexo.data").joinpath(
            "default_params.yaml").read_text()
        return params_from_dict(yaml.safe_load(text))
    with open(path) as fh:
        return params_from_dict(yaml.safe_load(fh))


def save_params(params: ControllerParams, path,
                header_lines: list[str] | None = None):
    with open(path, "w") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        yaml.safe_dump(params_to_dict(params), fh, sort_keys=True,
                       default_flow_style=False)


def load_yaml(path) -> dict:
    with open(path) as fh:
        return yaml.safe_load(fh)
