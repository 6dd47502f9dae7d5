"""Outcome computation: cosine similarity, biological-moment subtraction,
joint power, positive work, peak power, and ensemble averages.

Works are mass-normalized (J/kg), powers W/kg, moments Nm/kg. Exoskeleton
torque arrives in Nm and is divided by body mass where it meets the
biological side. All functions are pure.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

from .gaitdata import (CH_ANKLE_MOMENT, CH_ANKLE_VEL, CH_EXO, CH_HIP_MOMENT,
                       CH_HIP_VEL, CH_KNEE_MOMENT, CH_KNEE_VEL, StrideSeries)
from .signals import integrate_positive


def cosine_similarity(a, b) -> float:
    """Normalized inner product of two equal-length series, in [-1, 1].

    Raises ``ValueError`` for length mismatch, length < 2, or zero-norm
    input (similarity undefined).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ValueError("need at least 2 samples")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("similarity undefined for zero-norm input")
    sim = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, sim))


def biological_moment(net_moment, exo_torque, mass: float) -> np.ndarray:
    """Biological contribution: net moment (Nm/kg) minus exo torque (Nm)
    over body mass."""
    if not mass > 0:
        raise ValueError("mass must be > 0")
    net = np.asarray(net_moment, dtype=float)
    exo = np.asarray(exo_torque, dtype=float)
    if net.shape != exo.shape:
        raise ValueError(f"length mismatch: {net.shape} vs {exo.shape}")
    return net - exo / mass


def joint_power(moment, velocity) -> np.ndarray:
    """Elementwise moment * velocity (W/kg for mass-normalized moments)."""
    m = np.asarray(moment, dtype=float)
    v = np.asarray(velocity, dtype=float)
    if m.shape != v.shape:
        raise ValueError(f"length mismatch: {m.shape} vs {v.shape}")
    return m * v


def positive_work(power, cycle_duration: float) -> float:
    """Positive-power integral over the de-normalized cycle time, J/kg."""
    p = np.asarray(power, dtype=float)
    if not cycle_duration > 0:
        raise ValueError("cycle_duration must be > 0")
    dt = cycle_duration / (p.size - 1)
    return integrate_positive(p, dt)


def peak_positive(power) -> float:
    """Largest positive value of a power series (0 if none positive)."""
    p = np.asarray(power, dtype=float)
    if p.size == 0:
        raise ValueError("empty power series")
    return max(float(np.max(p)), 0.0)


def ensemble_average(strides: list[StrideSeries], channel: str):
    """Pointwise mean and sample (n-1) standard deviation of one channel."""
    if len(strides) < 2:
        raise ValueError("need at least 2 strides for an ensemble")
    n = strides[0].n
    if any(s.n != n for s in strides):
        raise ValueError("strides must share the same grid")
    data = np.stack([s.channels[channel] for s in strides])
    return data.mean(axis=0), data.std(axis=0, ddof=1)


@dataclass
class TaskEnergetics:
    """Per-task, per-condition outcome row of the energetics report."""

    task: str                 # display code, e.g. "RA 11"
    condition: str            # "unassisted" | "assisted"
    hip_work: float           # J/kg, biological hip positive work
    lowerlimb_work: float     # J/kg, hip + knee + ankle
    peak_bio_power: float     # W/kg
    peak_total_power: float   # W/kg, biological + exoskeleton
    mean_extension_scale: float
    sim: float                # exo vs biological profile similarity (nan if n/a)
    n_strides: int
    hip_intensive: bool


REPORT_COLUMNS = tuple(f.name for f in fields(TaskEnergetics))


def stride_energetics(stride: StrideSeries) -> dict:
    """Single-stride outcomes; uses the exo_torque channel when present."""
    mass = stride.body_mass
    vel = stride.channels[CH_HIP_VEL]
    net = stride.channels[CH_HIP_MOMENT]
    exo = stride.channels.get(CH_EXO)
    if exo is None:
        bio = net
        exo_power = np.zeros_like(net)
    else:
        bio = biological_moment(net, exo, mass)
        exo_power = joint_power(exo / mass, vel)

    bio_power = joint_power(bio, vel)
    total_power = bio_power + exo_power
    out = {
        "hip_work": positive_work(bio_power, stride.cycle_duration),
        "peak_bio_power": peak_positive(bio_power),
        "peak_total_power": peak_positive(total_power),
        "exo_power": exo_power,
        "bio_power": bio_power,
    }

    lower = out["hip_work"]
    for mom_ch, vel_ch in ((CH_KNEE_MOMENT, CH_KNEE_VEL),
                           (CH_ANKLE_MOMENT, CH_ANKLE_VEL)):
        if mom_ch in stride.channels and vel_ch in stride.channels:
            p = joint_power(stride.channels[mom_ch], stride.channels[vel_ch])
            lower += positive_work(p, stride.cycle_duration)
    out["lowerlimb_work"] = lower

    if exo is not None and np.linalg.norm(exo) > 0 and np.linalg.norm(bio) > 0:
        out["sim"] = cosine_similarity(exo / mass, bio)
    else:
        out["sim"] = float("nan")
    return out


def task_energetics(strides: list[StrideSeries], condition: str,
                    mean_extension_scale: float = 1.0) -> TaskEnergetics:
    """Average per-stride outcomes over one task's stride set."""
    if not strides:
        raise ValueError("empty stride set")
    per = [stride_energetics(s) for s in strides]
    mean = lambda key: float(np.mean([p[key] for p in per]))
    sims = [p["sim"] for p in per if np.isfinite(p["sim"])]
    label = strides[0].label
    return TaskEnergetics(
        task=label.code,
        condition=condition,
        hip_work=mean("hip_work"),
        lowerlimb_work=mean("lowerlimb_work"),
        peak_bio_power=mean("peak_bio_power"),
        peak_total_power=mean("peak_total_power"),
        mean_extension_scale=mean_extension_scale,
        sim=float(np.mean(sims)) if sims else float("nan"),
        n_strides=len(strides),
        hip_intensive=label.is_hip_intensive,
    )


def write_report(rows: list[TaskEnergetics], path,
                 header_lines: list[str] | None = None):
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([
                row.task, row.condition, repr(row.hip_work),
                repr(row.lowerlimb_work), repr(row.peak_bio_power),
                repr(row.peak_total_power), repr(row.mean_extension_scale),
                repr(row.sim), str(row.n_strides),
                "1" if row.hip_intensive else "0",
            ])


def read_report(path) -> list[TaskEnergetics]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(r for r in fh if not r.startswith("#"))
        header = next(reader)
        for rec in reader:
            d = dict(zip(header, rec))
            rows.append(TaskEnergetics(
                task=d["task"], condition=d["condition"],
                hip_work=float(d["hip_work"]),
                lowerlimb_work=float(d["lowerlimb_work"]),
                peak_bio_power=float(d["peak_bio_power"]),
                peak_total_power=float(d["peak_total_power"]),
                mean_extension_scale=float(d["mean_extension_scale"]),
                sim=float(d["sim"]), n_strides=int(d["n_strides"]),
                hip_intensive=d["hip_intensive"] == "1",
            ))
    return rows


def percent_change(assisted: float, unassisted: float) -> float:
    """(assisted - unassisted) / unassisted * 100; negative means reduction."""
    if unassisted == 0:
        return float("nan")
    return (assisted - unassisted) / unassisted * 100.0


def paired_summary(rows: list[TaskEnergetics]) -> list[dict]:
    """Pair assisted/unassisted rows by task and add percent-change columns."""
    by_task: dict[str, dict[str, TaskEnergetics]] = {}
    for row in rows:
        by_task.setdefault(row.task, {})[row.condition] = row
    out = []
    for task, pair in by_task.items():
        rec = {"task": task}
        un = pair.get("unassisted")
        ex = pair.get("assisted")
        if un and ex:
            for metric in ("hip_work", "lowerlimb_work",
                           "peak_bio_power", "peak_total_power"):
                rec[metric + "_unassisted"] = getattr(un, metric)
                rec[metric + "_assisted"] = getattr(ex, metric)
                rec[metric + "_change_pct"] = percent_change(
                    getattr(ex, metric), getattr(un, metric))
            rec["sim"] = ex.sim
            rec["mean_extension_scale"] = ex.mean_extension_scale
            rec["hip_intensive"] = un.hip_intensive
        else:
            rec["incomplete"] = True
        out.append(rec)
    return out
