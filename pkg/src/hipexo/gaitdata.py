"""Dataset ingestion, stride segmentation, time normalization, and synthetic
multi-activity profile generation.

Internal units are rad, rad/s, Nm/kg, N/kg, and seconds. CSV inputs are
adapted through a schema map (column names + units), so exports of different
public datasets can be used without code changes. Synthetic profiles stand
in for normative datasets when none are on disk: smooth periodic kinematic
and moment profiles per activity, with seeded inter-stride jitter.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .signals import BiquadSpec, SigmoidParams, lowpass_zero_lag
from .springs import (GaitSpringParams, StsSpringParams, gait_torque_series,
                      sts_torque_series)

G = 9.80665  # m/s^2, used for bodyweight-relative force units

# canonical channel names
CH_HIP_ANGLE = "hip_angle"
CH_HIP_VEL = "hip_vel"
CH_HIP_ANGLE_CON = "hip_angle_contra"
CH_HIP_VEL_CON = "hip_vel_contra"
CH_THIGH = "thigh_angle"
CH_THIGH_CON = "thigh_angle_contra"
CH_TORSO = "torso_angle"
CH_HIP_MOMENT = "hip_moment"
CH_KNEE_MOMENT = "knee_moment"
CH_ANKLE_MOMENT = "ankle_moment"
CH_KNEE_VEL = "knee_vel"
CH_ANKLE_VEL = "ankle_vel"
CH_GRF = "grf_vertical"
CH_THIGH_ACC = "thigh_accel"
CH_THIGH_ACC_CON = "thigh_accel_contra"
CH_PELVIS_ACC = "pelvis_accel"
CH_EXO = "exo_torque"

REQUIRED_CHANNELS = (CH_HIP_ANGLE, CH_HIP_VEL, CH_THIGH, CH_THIGH_CON,
                     CH_TORSO, CH_HIP_MOMENT)

KINEMATIC_CHANNELS = (CH_HIP_ANGLE, CH_HIP_VEL, CH_HIP_ANGLE_CON,
                      CH_HIP_VEL_CON, CH_THIGH, CH_THIGH_CON, CH_TORSO,
                      CH_KNEE_VEL, CH_ANKLE_VEL)

KINDS = ("level-walk", "ramp-ascent", "ramp-descent",
         "stair-ascent", "stair-descent", "sit-to-stand")

_CODES = {"level-walk": "LG", "ramp-ascent": "RA", "ramp-descent": "RD",
          "stair-ascent": "SA", "stair-descent": "SD", "sit-to-stand": "STS"}

HIP_INTENSIVE = ("level-walk", "ramp-ascent", "stair-ascent", "sit-to-stand")


class LoadError(ValueError):
    """Raised on malformed or incomplete input files."""


@dataclass(frozen=True)
class ActivityLabel:
    """Task identity: kind plus its parameter (speed m/s, grade deg, or
    step height m; unused for sit-to-stand)."""

    kind: str
    parameter: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activity kind {self.kind!r}")
        p = self.parameter
        if self.kind == "level-walk" and not 0 < p <= 3.0:
            raise ValueError(f"walking speed {p} m/s out of range")
        if self.kind.startswith("ramp") and not 0 < p <= 45.0:
            raise ValueError(f"ramp grade {p} deg out of range")
        if self.kind.startswith("stair") and not 0 < p <= 0.4:
            raise ValueError(f"step height {p} m out of range")

    @property
    def code(self) -> str:
        """Short display code, e.g. 'LG 0.85', 'RA 11', 'SD 7', 'STS'."""
        abbr = _CODES[self.kind]
        if self.kind == "sit-to-stand":
            return abbr
        if self.kind.startswith("stair"):
            return f"{abbr} {round(self.parameter / 0.0254):g}"  # inches
        p = self.parameter
        return f"{abbr} {p:g}"

    @property
    def is_descent(self) -> bool:
        return self.kind in ("ramp-descent", "stair-descent")

    @property
    def is_hip_intensive(self) -> bool:
        return self.kind in HIP_INTENSIVE

    @property
    def is_gait(self) -> bool:
        return self.kind != "sit-to-stand"

    @classmethod
    def parse(cls, text: str) -> "ActivityLabel":
        """Parse 'kind' or 'kind:parameter', e.g. 'ramp-ascent:11'."""
        if ":" in text:
            kind, param = text.split(":", 1)
            return cls(kind.strip(), float(param))
        return cls(text.strip(), 0.0) if text.strip() == "sit-to-stand" \
            else cls(text.strip())


@dataclass
class StrideSeries:
    """One time-normalized activity cycle: channel grids over 0-100%."""

    label: ActivityLabel
    channels: dict[str, np.ndarray]
    body_mass: float        # kg
    cycle_duration: float   # s
    stance_fraction: float | None = None
    condition: str = "unassisted"

    def __post_init__(self):
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) != 1:
            raise ValueError(f"channel grids differ in length: {sorted(lengths)}")
        if not self.cycle_duration > 0:
            raise ValueError("cycle_duration must be > 0")
        if not self.body_mass > 0:
            raise ValueError("body_mass must be > 0")
        missing = [c for c in REQUIRED_CHANNELS if c not in self.channels]
        if missing:
            raise ValueError(f"stride missing required channels: {missing}")
        for name in (CH_HIP_MOMENT, CH_KNEE_MOMENT, CH_ANKLE_MOMENT):
            if name in self.channels and not np.all(np.isfinite(self.channels[name])):
                raise ValueError(f"moment grid {name} must be finite")

    @property
    def n(self) -> int:
        return len(self.channels[CH_HIP_ANGLE])

    @property
    def dt(self) -> float:
        return self.cycle_duration / (self.n - 1)

    def contra(self, name: str) -> np.ndarray:
        """Contralateral counterpart of a channel.

        Uses the stored contra channel when present; otherwise shifts the
        ipsilateral channel by half a cycle for gait tasks, or mirrors it
        for the bilateral sit-to-stand.
        """
        mapping = {CH_HIP_ANGLE: CH_HIP_ANGLE_CON, CH_HIP_VEL: CH_HIP_VEL_CON,
                   CH_THIGH: CH_THIGH_CON, CH_THIGH_ACC: CH_THIGH_ACC_CON}
        con = mapping.get(name)
        if con is not None and con in self.channels:
            return self.channels[con]
        base = self.channels[name]
        if not self.label.is_gait:
            return base
        half = (self.n - 1) // 2
        return np.concatenate([base[half:], base[1:half + 1]])

    def copy_with(self, **extra_channels) -> "StrideSeries":
        ch = dict(self.channels)
        for k, v in extra_channels.items():
            ch[k] = np.asarray(v, dtype=float)
        return StrideSeries(self.label, ch, self.body_mass, self.cycle_duration,
                            self.stance_fraction, self.condition)


@dataclass
class RawTrial:
    """Uniformly sampled multi-channel recording, already in internal units."""

    sample_rate_hz: float
    channels: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)


# --- schema-mapped CSV ingestion -----------------------------------------

_UNIT_SCALE = {
    "rad": 1.0, "deg": math.pi / 180.0,
    "rad/s": 1.0, "deg/s": math.pi / 180.0,
    "nm/kg": 1.0, "n/kg": 1.0,
    "m/s^2": 1.0, "m/s2": 1.0,
}
_MASS_UNITS = {"nm", "n"}   # divided by body mass on load
_BW_UNITS = {"bw"}          # bodyweight-relative force: multiplied by g

MAX_NAN_RUN = 5


def _convert(values: np.ndarray, unit: str, body_mass: float) -> np.ndarray:
    u = unit.strip().lower()
    if u in _UNIT_SCALE:
        return values * _UNIT_SCALE[u]
    if u in _MASS_UNITS:
        return values / body_mass
    if u in _BW_UNITS:
        return values * G
    raise LoadError(f"unsupported unit {unit!r}")


def _fill_short_nan_runs(values: np.ndarray, column: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if not bad.any():
        return values
    idx = np.flatnonzero(bad)
    splits = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    for run in splits:
        if len(run) > MAX_NAN_RUN:
            raise LoadError(
                f"column {column!r} has a NaN run of {len(run)} samples "
                f"(max {MAX_NAN_RUN})")
    good = np.flatnonzero(~bad)
    if len(good) < 2:
        raise LoadError(f"column {column!r} has too few valid samples")
    out = values.copy()
    out[bad] = np.interp(np.flatnonzero(bad), good, values[good])
    return out


def load_schema(path) -> dict:
    """Load a YAML schema map for :func:`load_trial`."""
    import yaml
    with open(path) as fh:
        schema = yaml.safe_load(fh)
    if not isinstance(schema, dict) or "columns" not in schema:
        raise LoadError(f"schema {path} must define a 'columns' mapping")
    return schema


def load_trial(path, schema: dict) -> RawTrial:
    """Read a one-header-row CSV through a schema map into internal units.

    The schema provides sample_rate_hz, body_mass_kg, task, and a 'columns'
    mapping of canonical channel -> {name, unit}. Missing columns, unknown
    units, and NaN runs longer than 5 samples raise :class:`LoadError`.
    """
    path = Path(path)
    if not path.exists():
        raise LoadError(f"no such file: {path}")
    rate = float(schema.get("sample_rate_hz", 0))
    if not rate > 0:
        raise LoadError("schema must set sample_rate_hz > 0")
    mass = float(schema.get("body_mass_kg", 0))
    if not mass > 0:
        raise LoadError("schema must set body_mass_kg > 0")

    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise LoadError(f"{path}: empty file")
        header = [h.strip() for h in header]
        rows = [row for row in reader if row]
    col_index = {name: i for i, name in enumerate(header)}

    channels: dict[str, np.ndarray] = {}
    for canonical, spec in schema["columns"].items():
        name = spec["name"] if isinstance(spec, dict) else str(spec)
        unit = spec.get("unit", "rad") if isinstance(spec, dict) else "rad"
        if name not in col_index:
            raise LoadError(f"{path}: missing channel column {name!r} "
                            f"(mapped to {canonical!r})")
        j = col_index[name]
        try:
            raw = np.array([float(r[j]) if r[j].strip() != "" else np.nan
                            for r in rows])
        except (ValueError, IndexError) as exc:
            raise LoadError(f"{path}: cannot parse column {name!r}: {exc}") from exc
        raw = _fill_short_nan_runs(raw, name)
        channels[canonical] = _convert(raw, unit, mass)

    if not channels:
        raise LoadError(f"{path}: schema mapped no channels")
    lengths = {len(v) for v in channels.values()}
    if len(lengths) != 1:
        raise LoadError(f"{path}: ragged columns {sorted(lengths)}")

    meta = {"body_mass": mass, "source": str(path)}
    if "task" in schema:
        meta["label"] = ActivityLabel.parse(str(schema["task"]))
    if "stance_fraction" in schema:
        meta["stance_fraction"] = float(schema["stance_fraction"])

    trial = RawTrial(sample_rate_hz=rate, channels=channels, meta=meta)
    pre = schema.get("prefilter")
    if pre:
        filter_trial(trial,
                     kinematics_hz=float(pre.get("kinematics_hz", 6.0)),
                     moments_hz=float(pre.get("moments_hz", 6.0)),
                     grf_hz=float(pre.get("grf_hz", 20.0)))
    return trial


def filter_trial(trial: RawTrial, kinematics_hz: float = 6.0,
                 moments_hz: float = 6.0, grf_hz: float = 20.0):
    """Zero-lag low-pass of the raw uniform grid, in place.

    Applied before segmentation, never after resampling: the filter's
    semantics need uniform time sampling.
    """
    for name, series in trial.channels.items():
        if name == CH_GRF:
            cutoff = grf_hz
        elif name in (CH_HIP_MOMENT, CH_KNEE_MOMENT, CH_ANKLE_MOMENT, CH_EXO):
            cutoff = moments_hz
        elif name in KINEMATIC_CHANNELS:
            cutoff = kinematics_hz
        else:
            continue
        trial.channels[name] = lowpass_zero_lag(
            series, BiquadSpec(cutoff, trial.sample_rate_hz))


# --- stride segmentation and normalization --------------------------------

STRIDE_DURATION_SANE = (0.4, 5.0)  # seconds


def segment_strides(trial: RawTrial, threshold_frac: float = 0.05,
                    debounce_s: float = 0.2) -> list[tuple[int, int]]:
    """Heel strikes at upward crossings of a bodyweight-fraction GRF
    threshold; strides are consecutive HS-to-HS index ranges.

    Requires the vertical GRF channel (N/kg). Crossings within the debounce
    window of the previous one are chatter and ignored. Strides outside the
    [0.4, 5] s sanity window are kept but flagged with a warning.
    """
    if CH_GRF not in trial.channels:
        raise LoadError("segmentation requires the vertical GRF channel")
    grf = trial.channels[CH_GRF]
    thr = threshold_frac * G  # N/kg per unit bodyweight
    above = grf >= thr
    crossings = np.flatnonzero(~above[:-1] & above[1:]) + 1
    debounce = int(round(debounce_s * trial.sample_rate_hz))
    events = []
    for i in crossings:
        if not events or i - events[-1] >= debounce:
            events.append(int(i))
    if len(events) < 2:
        raise LoadError(f"found {len(events)} heel strikes, need at least 2")
    ranges = [(events[k], events[k + 1]) for k in range(len(events) - 1)]
    for i0, i1 in ranges:
        dur = (i1 - i0) / trial.sample_rate_hz
        if not STRIDE_DURATION_SANE[0] <= dur <= STRIDE_DURATION_SANE[1]:
            warnings.warn(f"stride [{i0}, {i1}] lasts {dur:.2f} s, outside "
                          f"the {STRIDE_DURATION_SANE} s sanity window")
    return ranges


def normalize_stride(trial: RawTrial, stride_range: tuple[int, int],
                     n_samples: int = 101) -> StrideSeries:
    """Linear-interpolation resample of one stride onto a uniform 0-100% grid."""
    i0, i1 = stride_range
    n_trial = len(next(iter(trial.channels.values())))
    if not (0 <= i0 < i1 < n_trial):
        raise ValueError(f"stride range {stride_range} outside trial")
    if n_samples < 50:
        raise ValueError("n_samples must be >= 50")
    src = np.arange(i0, i1 + 1, dtype=float)
    dst = np.linspace(i0, i1, n_samples)
    channels = {name: np.interp(dst, src, series[i0:i1 + 1])
                for name, series in trial.channels.items()}
    label = trial.meta.get("label") or ActivityLabel("level-walk", 1.0)
    return StrideSeries(
        label=label,
        channels=channels,
        body_mass=float(trial.meta.get("body_mass", 70.0)),
        cycle_duration=(i1 - i0) / trial.sample_rate_hz,
        stance_fraction=trial.meta.get("stance_fraction"),
    )


# --- stride file round-trip ------------------------------------------------

def stride_meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def save_stride(stride: StrideSeries, path, header_lines: list[str] | None = None):
    """Write a stride as CSV (repr floats, bit-exact round-trip) plus a JSON
    metadata sidecar."""
    path = Path(path)
    names = sorted(stride.channels)
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(stride.n):
            writer.writerow([repr(float(stride.channels[c][i])) for c in names])
    meta = {
        "kind": stride.label.kind,
        "parameter": stride.label.parameter,
        "body_mass": stride.body_mass,
        "cycle_duration": stride.cycle_duration,
        "stance_fraction": stride.stance_fraction,
        "condition": stride.condition,
    }
    with open(stride_meta_path(path), "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)


def load_stride(path) -> StrideSeries:
    """Reload a stride written by :func:`save_stride` (bit-identical grids)."""
    path = Path(path)
    meta_path = stride_meta_path(path)
    if not meta_path.exists():
        raise LoadError(f"missing metadata sidecar {meta_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        data = list(reader)
    channels = {name: np.array([float(row[j]) for row in data])
                for j, name in enumerate(header)}
    return StrideSeries(
        label=ActivityLabel(meta["kind"], meta["parameter"]),
        channels=channels,
        body_mass=float(meta["body_mass"]),
        cycle_duration=float(meta["cycle_duration"]),
        stance_fraction=meta.get("stance_fraction"),
        condition=meta.get("condition", "unassisted"),
    )


def list_stride_files(directory) -> list[Path]:
    return sorted(p for p in Path(directory).glob("*.csv"))


# --- synthetic activity profiles ------------------------------------------

SYNTH_N = 201  # grid length of generated strides


def _periodic(xk, yk, x):
    xk = np.asarray(xk, dtype=float)
    yk = np.asarray(yk, dtype=float)
    spline = CubicSpline(np.append(xk, 1.0), np.append(yk, yk[0]),
                         bc_type="periodic")
    return spline(x % 1.0), spline.derivative()(x % 1.0)


def _bump(x, center, width):
    """Raised-cosine bump of unit height, wrapped periodically."""
    d = (np.asarray(x) - center + 0.5) % 1.0 - 0.5
    out = np.zeros_like(d)
    m = np.abs(d) < width / 2
    out[m] = 0.5 * (1.0 + np.cos(2.0 * np.pi * d[m] / width))
    return out


def _smoothstep(x, x0, x1):
    s = np.clip((np.asarray(x, dtype=float) - x0) / (x1 - x0), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


# reference basis used to synthesize spring-consistent normative moments for
# hip-intensive tasks (the family a velocity-modulated spring can deliver);
# descent tasks blend in an out-of-family eccentric component so their
# profiles are deliberately harder to track
_REF_GAIT = GaitSpringParams(
    k_ext=45.0, k_flex=35.0, theta_ext_eq=0.45, theta_flex_eq=0.30,
    vel_mod_ext=SigmoidParams(-3.0, 4.0), vel_mod_flex=SigmoidParams(3.5, 3.0))
_REF_STS = StsSpringParams(
    k_sts=27.0, vel_mod=SigmoidParams(-4.0, 2.0),
    torso_mod=SigmoidParams(12.0, 4.0))
_REF_SCALE = 20.0  # Nm per Nm/kg

# per-kind shape tables: keypoint phases/values for the hip angle, the
# descent eccentric moment component, HS spike gains, and timing constants
_GAIT_SHAPES = {
    "level-walk": dict(
        xa=[0.00, 0.12, 0.30, 0.50, 0.62, 0.80, 0.92],
        ya=[0.52, 0.38, 0.08, -0.16, 0.02, 0.48, 0.57],
        duration=1.35, stance=0.62, torso=0.06,
        thigh_spike=25.0, pelvis_spike=5.0,
    ),
    "ramp-ascent": dict(
        xa=[0.00, 0.12, 0.30, 0.50, 0.62, 0.80, 0.92],
        ya=[0.62, 0.46, 0.12, -0.10, 0.06, 0.56, 0.66],
        duration=1.25, stance=0.62, torso=0.12,
        thigh_spike=25.0, pelvis_spike=5.0,
    ),
    "stair-ascent": dict(
        xa=[0.00, 0.12, 0.32, 0.52, 0.64, 0.82, 0.92],
        ya=[0.82, 0.62, 0.18, -0.04, 0.10, 0.70, 0.86],
        duration=1.45, stance=0.64, torso=0.15,
        thigh_spike=25.0, pelvis_spike=5.0,
    ),
    "ramp-descent": dict(
        xa=[0.00, 0.12, 0.30, 0.50, 0.62, 0.80, 0.92],
        ya=[0.30, 0.24, 0.06, -0.09, 0.00, 0.24, 0.32],
        xe=[0.00, 0.08, 0.22, 0.38, 0.52, 0.66, 0.80, 0.92],
        ye=[0.00, -0.10, 0.18, 0.42, 0.28, 0.08, -0.02, 0.00],
        ecc_mix=1.0,
        duration=1.20, stance=0.62, torso=0.02,
        thigh_spike=25.0, pelvis_spike=8.0,
    ),
    "stair-descent": dict(
        xa=[0.00, 0.15, 0.35, 0.50, 0.65, 0.85],
        ya=[0.12, 0.09, 0.01, 0.035, 0.02, 0.10],
        xe=[0.00, 0.08, 0.25, 0.42, 0.58, 0.72, 0.88],
        ye=[0.00, 0.10, 0.35, 0.30, 0.05, -0.05, 0.00],
        ecc_mix=1.3,
        duration=1.30, stance=0.64, torso=0.00,
        thigh_spike=7.5, pelvis_spike=18.0,  # attenuated thigh signature
    ),
}

_ACC_BASE_THIGH = 3.0   # m/s^2 baseline oscillation of the thigh channel
_ACC_BASE_PELVIS = 0.8
_SPIKE_WIDTH = 0.030    # fraction of cycle


def _grade_scale(label: ActivityLabel) -> tuple[float, float]:
    """Mild amplitude scalings (kinematics, moment) from the task parameter."""
    if label.kind == "level-walk":
        s = 0.85 + 0.18 * label.parameter
        return s, s
    if label.kind == "ramp-ascent":
        return 1.0 + 0.008 * label.parameter, 1.0 + 0.02 * label.parameter
    if label.kind == "ramp-descent":
        # steeper descent: shorter steps, stronger braking moment
        return max(0.4, 1.0 - 0.045 * label.parameter), 1.0 + 0.015 * label.parameter
    if label.kind.startswith("stair"):
        return 0.8 + 1.4 * label.parameter, 0.8 + 1.6 * label.parameter
    return 1.0, 1.0


def synth_profiles(label: ActivityLabel, seed: int,
                   n_samples: int = SYNTH_N, body_mass: float = 70.0) -> StrideSeries:
    """One synthetic stride for the given activity, deterministic per seed.

    Gait tasks are smooth periodic profiles with a biphasic hip moment and
    heel-strike acceleration signatures; sit-to-stand is a single seated-to-
    standing transition with a forward torso lean. Seeded jitter perturbs
    amplitude and timing for inter-stride variability.
    """
    rng = np.random.default_rng(seed)
    if label.kind == "sit-to-stand":
        return _synth_sts(label, rng, n_samples, body_mass)
    return _synth_gait(label, rng, n_samples, body_mass)


def _synth_gait(label, rng, n, body_mass):
    shape = _GAIT_SHAPES[label.kind]
    kin_scale, mom_scale = _grade_scale(label)
    kin_scale *= 1.0 + 0.04 * rng.standard_normal()
    mom_scale *= 1.0 + 0.04 * rng.standard_normal()
    if label.kind == "level-walk":
        duration = 1.45 - 0.35 * label.parameter
    else:
        duration = shape["duration"]
    duration *= 1.0 + 0.03 * rng.standard_normal()

    x = np.linspace(0.0, 1.0, n)
    hip, dhip = _periodic(shape["xa"], np.asarray(shape["ya"]) * kin_scale, x)
    hip_vel = dhip / duration

    torso = shape["torso"] + 0.02 * np.sin(2 * np.pi * 2 * x)
    thigh = hip - torso
    hip_con, dhip_con = _periodic(shape["xa"],
                                  np.asarray(shape["ya"]) * kin_scale,
                                  x + 0.5)
    thigh_con = hip_con - torso

    # normative hip moment: the reference-spring profile on these
    # kinematics, plus an out-of-family eccentric component for descent and
    # a small smooth residual for realism
    spring = gait_torque_series(hip, hip_vel, _REF_GAIT) / _REF_SCALE
    residual_amp = 0.02 * float(np.max(np.abs(spring)))
    residual = residual_amp * (np.sin(2 * np.pi * x + rng.uniform(0, 2 * np.pi))
                               + 0.5 * np.sin(4 * np.pi * x
                                              + rng.uniform(0, 2 * np.pi)))
    if label.is_descent:
        ecc, _ = _periodic(shape["xe"], shape["ye"], x)
        ecc *= shape["ecc_mix"] * np.linalg.norm(spring) / np.linalg.norm(ecc)
        moment = spring + ecc
        # renormalize to a plausible descent demand
        moment *= mom_scale * 0.35 / np.max(np.abs(moment))
    else:
        moment = mom_scale * (spring + residual)

    stance = shape["stance"]
    s = np.clip(x / stance, 0.0, 1.0)
    env = _smoothstep(x, 0.0, 0.07) * (1.0 - _smoothstep(x, stance - 0.07, stance))
    grf = np.where(x <= stance,
                   G * env * (1.05 - 0.15 * np.cos(2 * np.pi * s)), 0.0)
    grf = np.maximum(grf, 0.0)

    if label.kind == "stair-descent":
        # cautious descent: thigh deceleration bottoms out at contact, so the
        # (already weak) spike rides a baseline trough
        base_phase = -np.pi / 2 + 0.1 * rng.standard_normal()
    else:
        base_phase = rng.uniform(0, 2 * np.pi)
    thigh_acc = (_ACC_BASE_THIGH * np.sin(2 * np.pi * 2 * x + base_phase)
                 + 0.2 * rng.standard_normal(n)
                 + shape["thigh_spike"] * _bump(x, 0.0, _SPIKE_WIDTH))
    thigh_acc_con = (_ACC_BASE_THIGH * np.sin(2 * np.pi * 2 * x + base_phase + 1.1)
                     + 0.2 * rng.standard_normal(n)
                     + shape["thigh_spike"] * _bump(x, 0.5, _SPIKE_WIDTH))
    pelvis_acc = (_ACC_BASE_PELVIS * np.abs(np.sin(2 * np.pi * 2 * x))
                  + 0.1 * rng.standard_normal(n)
                  + shape["pelvis_spike"] * (_bump(x, 0.0, _SPIKE_WIDTH)
                                             + _bump(x, 0.5, _SPIKE_WIDTH)))

    knee_vel = 2.0 * np.sin(2 * np.pi * (x + 0.1))
    knee_moment = 0.5 * mom_scale * np.sin(2 * np.pi * (x + 0.1))
    ankle_vel = -1.5 * np.sin(2 * np.pi * (x + 0.3))
    ankle_moment = -0.9 * mom_scale * np.sin(np.pi * np.clip(x / stance, 0, 1)) ** 2

    channels = {
        CH_HIP_ANGLE: hip, CH_HIP_VEL: hip_vel,
        CH_HIP_ANGLE_CON: hip_con, CH_HIP_VEL_CON: dhip_con / duration,
        CH_THIGH: thigh, CH_THIGH_CON: thigh_con, CH_TORSO: torso,
        CH_HIP_MOMENT: moment,
        CH_KNEE_MOMENT: knee_moment, CH_KNEE_VEL: knee_vel,
        CH_ANKLE_MOMENT: ankle_moment, CH_ANKLE_VEL: ankle_vel,
        CH_GRF: grf,
        CH_THIGH_ACC: thigh_acc, CH_THIGH_ACC_CON: thigh_acc_con,
        CH_PELVIS_ACC: pelvis_acc,
    }
    return StrideSeries(label, channels, body_mass, duration,
                        stance_fraction=stance)


def _synth_sts(label, rng, n, body_mass):
    duration = 2.6 * (1.0 + 0.04 * rng.standard_normal())
    amp = 1.0 + 0.04 * rng.standard_normal()
    x = np.linspace(0.0, 1.0, n)

    thigh = 1.35 * amp * (1.0 - _smoothstep(x, 0.25, 0.72)) + 0.03
    torso = 0.06 + 0.38 * amp * np.exp(-((x - 0.33) / 0.16) ** 2)
    hip = thigh + torso
    dx = x[1] - x[0]
    hip_vel = np.gradient(hip, dx) / duration

    # normative moment from the reference STS spring on these kinematics
    moment = sts_torque_series(thigh, hip_vel, torso, _REF_STS) / _REF_SCALE
    moment += 0.01 * np.sin(2 * np.pi * x + rng.uniform(0, 2 * np.pi))
    grf = G * (0.55 + 0.45 * _smoothstep(x, 0.3, 0.6))
    knee_vel = np.gradient(1.6 * (1.0 - _smoothstep(x, 0.3, 0.75)), dx) / duration
    knee_moment = -0.7 * amp * np.exp(-((x - 0.5) / 0.16) ** 2)
    ankle_vel = np.gradient(0.2 * _smoothstep(x, 0.35, 0.8), dx) / duration
    ankle_moment = -0.35 * amp * _smoothstep(x, 0.35, 0.7)

    quiet = 0.1 * rng.standard_normal((3, n))
    channels = {
        CH_HIP_ANGLE: hip, CH_HIP_VEL: hip_vel,
        CH_HIP_ANGLE_CON: hip.copy(), CH_HIP_VEL_CON: hip_vel.copy(),
        CH_THIGH: thigh, CH_THIGH_CON: thigh.copy(), CH_TORSO: torso,
        CH_HIP_MOMENT: moment,
        CH_KNEE_MOMENT: knee_moment, CH_KNEE_VEL: knee_vel,
        CH_ANKLE_MOMENT: ankle_moment, CH_ANKLE_VEL: ankle_vel,
        CH_GRF: grf,
        CH_THIGH_ACC: quiet[0], CH_THIGH_ACC_CON: quiet[1],
        CH_PELVIS_ACC: np.abs(quiet[2]),
    }
    return StrideSeries(label, channels, body_mass, duration,
                        stance_fraction=None)


DEFAULT_BATTERY = (
    "level-walk:0.85", "level-walk:1.15",
    "ramp-ascent:5.2", "ramp-ascent:11",
    "stair-ascent:0.127", "stair-ascent:0.178",
    "ramp-descent:5.2", "ramp-descent:11",
    "stair-descent:0.127", "stair-descent:0.178",
    "sit-to-stand",
)


def synth_battery(tasks=DEFAULT_BATTERY, strides_per_task: int = 3,
                  seed: int = 7, body_mass: float = 70.0,
                  n_samples: int = SYNTH_N) -> dict[ActivityLabel, list[StrideSeries]]:
    """Deterministic multi-activity stride battery keyed by label."""
    battery: dict[ActivityLabel, list[StrideSeries]] = {}
    for i, task in enumerate(tasks):
        label = task if isinstance(task, ActivityLabel) else ActivityLabel.parse(task)
        battery[label] = [
            synth_profiles(label, seed + 1000 * i + j, n_samples, body_mass)
            for j in range(strides_per_task)
        ]
    return battery


# --- synthetic IMU streams for detector scoring ----------------------------

def synth_imu_stream(duration_s: float, rate_hz: float = 250.0, seed: int = 0,
                     stride_period_s: float = 1.05, thigh_spike: float = 25.0,
                     pelvis_spike: float = 5.0, thigh_amp: float = 0.3,
                     lead_in_s: float = 1.5):
    """Raw detector-input stream with known heel-strike times.

    Returns (frames, truth) where frames is a dict of uniformly sampled
    arrays (t, thigh_accel_l/r, pelvis_accel, thigh_angle_l/r) and truth is
    a list of (side, time) ground-truth events. Spikes are raised cosines of
    ~36 ms width; stride periods jitter a few percent per cycle.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * rate_hz))
    t = np.arange(n) / rate_hz

    events = []
    side = "left"
    tk = lead_in_s
    while tk < duration_s - 0.5:
        events.append((side, tk))
        tk += stride_period_s / 2 * (1.0 + 0.04 * rng.standard_normal())
        side = "right" if side == "left" else "left"

    width_s = 0.036
    thigh_l = _ACC_BASE_THIGH * np.sin(2 * np.pi * 1.9 * t) \
        + 0.2 * rng.standard_normal(n)
    thigh_r = _ACC_BASE_THIGH * np.sin(2 * np.pi * 1.9 * t + 1.3) \
        + 0.2 * rng.standard_normal(n)
    pelvis = _ACC_BASE_PELVIS * np.abs(np.sin(2 * np.pi * 1.9 * t)) \
        + 0.1 * rng.standard_normal(n)

    def add_spike(arr, t0, amp):
        i0 = int(np.floor((t0 - width_s / 2) * rate_hz))
        i1 = int(np.ceil((t0 + width_s / 2) * rate_hz))
        for i in range(max(0, i0), min(n, i1 + 1)):
            d = (t[i] - t0) / width_s
            if abs(d) < 0.5:
                arr[i] += amp * 0.5 * (1.0 + np.cos(2 * np.pi * d))

    for side_k, t0 in events:
        arr = thigh_l if side_k == "left" else thigh_r
        add_spike(arr, t0, thigh_spike)
        add_spike(pelvis, t0, pelvis_spike)

    def locked_angle(side_k):
        # cosine peaking exactly at this side's contacts, so the striking
        # leg always leads at its own events; virtual events one period
        # beyond each end keep the phase advancing at the stream edges
        times = [tk for s_k, tk in events if s_k == side_k]
        if len(times) < 2:
            return np.full(n, 0.1 + thigh_amp)
        period = float(np.median(np.diff(times)))
        times = [times[0] - period] + times + [times[-1] + period]
        phase = np.interp(t, times, np.arange(len(times), dtype=float))
        return 0.1 + thigh_amp * np.cos(2 * np.pi * phase)

    frames = {"t": t, "thigh_accel_l": thigh_l, "thigh_accel_r": thigh_r,
              "pelvis_accel": pelvis,
              "thigh_angle_l": locked_angle("left"),
              "thigh_angle_r": locked_angle("right")}
    return frames, events
