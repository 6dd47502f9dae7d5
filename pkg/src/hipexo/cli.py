"""Command-line operator surface.

Subcommands wire data ingestion, simulation, optimization, detection, and
reporting into reproducible runs: fixed config + seed give byte-identical
artifacts. Every output file carries a header block with the config hash,
seed, and tool version. Exit codes: 0 ok, 1 runtime failure, 2 usage or
config error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .configio import load_params, save_params
from .gaitdata import (CH_HIP_MOMENT, CH_HIP_VEL, DEFAULT_BATTERY,
                       ActivityLabel, LoadError, StrideSeries,
                       list_stride_files, load_schema, load_stride,
                       load_trial, normalize_stride, save_stride,
                       segment_strides, synth_battery)
from .heelstrike import HsDetector, HsDetectorConfig, ImuFrame, match_events
from .metrics import (ensemble_average, paired_summary, read_report,
                      task_energetics, write_report)
from .modulation import BilateralSample
from .optimize import (DEFAULT_FREE, ObjectiveSpec, TaskSet, format_sim_table,
                       optimize)
from .replay import BREAKDOWN_FIELDS, simulate_task

_PACKAGED_CONFIGS = {
    "simulate": "default_simulate.yaml",
    "optimize": "default_optimize.yaml",
}


class ConfigError(ValueError):
    pass


def _read_config(path: str, command: str) -> tuple[dict, bytes]:
    if path == "default":
        name = _PACKAGED_CONFIGS.get(command)
        if name is None:
            raise ConfigError(f"no packaged default config for {command!r}")
        raw = resources.files("hipexo.data").joinpath(name).read_bytes()
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        raw = p.read_bytes()
    cfg = yaml.safe_load(raw)
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} is not a mapping")
    return cfg, raw


class _Run:
    """Tracks created artifacts so a failed run leaves nothing partial."""

    def __init__(self, out_dir: Path, config_raw: bytes, seed: int):
        self.out = out_dir
        self.created: list[Path] = []
        digest = hashlib.sha256(config_raw).hexdigest()
        self.header = [f"tool: hipexo {__version__}",
                       f"config_sha256: {digest}",
                       f"seed: {seed}"]

    def path(self, *parts) -> Path:
        p = self.out.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.created.append(p)
        return p

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.created:
                try:
                    p.unlink(missing_ok=True)
                    p.with_name(p.stem + ".meta.json").unlink(missing_ok=True)
                except OSError:
                    pass
        return False


def _resolve_seed(args_seed, cfg: dict, default: int = 7) -> int:
    if args_seed is not None:
        return int(args_seed)
    battery = cfg.get("battery") or {}
    return int(battery.get("seed", cfg.get("seed", default)))


def _build_battery(cfg: dict, seed: int) -> dict[ActivityLabel, list[StrideSeries]]:
    spec = cfg.get("battery")
    if not spec:
        raise ConfigError("config needs a 'battery' section")
    if spec.get("synthetic"):
        return synth_battery(
            tasks=spec.get("tasks", DEFAULT_BATTERY),
            strides_per_task=int(spec.get("strides_per_task", 3)),
            seed=seed,
            body_mass=float(spec.get("body_mass", 70.0)),
        )
    if "dataset" in spec:
        battery: dict[ActivityLabel, list[StrideSeries]] = {}
        for entry in spec["dataset"]:
            schema = load_schema(entry["schema"])
            trial = load_trial(entry["csv"], schema)
            n = int(entry.get("n_samples", 101))
            for rng in segment_strides(trial):
                stride = normalize_stride(trial, rng, n)
                battery.setdefault(stride.label, []).append(stride)
        if not battery:
            raise ConfigError("dataset battery produced no strides")
        return battery
    raise ConfigError("battery must be synthetic or list dataset entries")


def _battery_tasks(battery, weights: dict) -> list[TaskSet]:
    tasks = []
    for label, strides in battery.items():
        w = float(weights.get(label.kind, 1.0))
        tasks.append(TaskSet(label, strides, w))
    return tasks


def _write_csv(path: Path, header: list[str], rows, header_lines):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# --- subcommands ------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg, raw = _read_config(args.config, "simulate")
    params = load_params(cfg.get("params", "default"))
    seed = _resolve_seed(args.seed, cfg)
    battery = _build_battery(cfg, seed)
    cycles = int(cfg.get("cycles", 4))
    with _Run(Path(args.out), raw, seed) as run:
        _simulate_into(run, params, battery, cycles)
    print(f"simulated {len(battery)} tasks -> {Path(args.out)}")
    return 0


def _simulate_into(run: _Run, params, battery, cycles: int):
    rows = []
    for label, strides in battery.items():
        assisted, logs = simulate_task(params, strides, cycles=cycles)
        code = label.code.replace(" ", "_")

        for k, (stride, out, log) in enumerate(zip(strides, assisted, logs)):
            save_stride(stride, run.path("strides", "unassisted", f"{code}_{k}.csv"),
                        run.header)
            save_stride(out, run.path("strides", "assisted", f"{code}_{k}.csv"),
                        run.header)
            step_rows = [
                [repr(log.t[i]), repr(log.phase[i])]
                + [repr(log.series[f][i]) for f in BREAKDOWN_FIELDS]
                for i in range(len(log.t))
            ]
            _write_csv(run.path("steps", f"{code}_{k}.csv"),
                       ["timestamp", "phase", *BREAKDOWN_FIELDS],
                       step_rows, run.header)

        # ensemble profiles over the task's strides (torque and power)
        n = strides[0].n
        if all(s.n == n for s in strides) and len(strides) >= 2:
            exo_mean, exo_sd = ensemble_average(assisted, "exo_torque")
            bio_mean, bio_sd = ensemble_average(strides, CH_HIP_MOMENT)
            power = [s.copy_with(power=s.channels[CH_HIP_MOMENT]
                                 * s.channels[CH_HIP_VEL]) for s in strides]
            p_mean, p_sd = ensemble_average(power, "power")
            percent = np.linspace(0.0, 100.0, n)
            prof_rows = [[repr(percent[i]), repr(bio_mean[i]), repr(bio_sd[i]),
                          repr(exo_mean[i]), repr(exo_sd[i]),
                          repr(p_mean[i]), repr(p_sd[i])] for i in range(n)]
            _write_csv(run.path("profiles", f"{code}.csv"),
                       ["percent", "bio_moment_mean", "bio_moment_sd",
                        "exo_torque_mean", "exo_torque_sd",
                        "bio_power_mean", "bio_power_sd"],
                       prof_rows, run.header)

        scale = float(np.mean([log.mean_extension_scale for log in logs]))
        rows.append(task_energetics(strides, "unassisted", 1.0))
        rows.append(task_energetics(assisted, "assisted", scale))

    write_report(rows, run.path("report.csv"), run.header)
    save_params(params, run.path("params_used.yaml"), run.header)


def cmd_optimize(args) -> int:
    cfg, raw = _read_config(args.config, "optimize")
    warm = load_params(cfg.get("params", "default"))
    seed = _resolve_seed(args.seed, cfg, default=0)
    battery = _build_battery(cfg, int(cfg.get("battery", {}).get("seed", 7)))
    tasks = _battery_tasks(battery, cfg.get("weights", {}))
    for t in tasks:
        for s in t.strides:
            if CH_HIP_MOMENT not in s.channels:
                raise ConfigError(
                    f"task {t.label.code}: missing channel {CH_HIP_MOMENT!r}")

    bounds = {k: tuple(float(x) for x in v)
              for k, v in cfg.get("bounds", {}).items()}
    free = tuple(cfg.get("free", DEFAULT_FREE))
    spec = ObjectiveSpec(
        tasks=tasks,
        c_static=float(cfg.get("c_static", 0.5)),
        c_sign=float(cfg.get("c_sign", 1.0)),
        free=free, bounds=bounds,
        target_scale=float(cfg.get("target_scale", 20.0)),
    )
    budget = int(cfg.get("budget", 6000))

    with _Run(Path(args.out), raw, seed) as run:
        result = optimize(spec, warm, budget=budget, seed=seed)
        save_params(result.best_params, run.path("best_params.yaml"), run.header)
        _write_csv(run.path("trace.csv"), ["evaluation", "best_objective"],
                   [[str(i), repr(v)] for i, v in result.trace], run.header)
        table = format_sim_table(result.per_task_sim)
        run.path("sim_table.txt").write_text(
            "".join(f"# {line}\n" for line in run.header) + table + "\n")
    print(table)
    print(f"objective {result.best_objective:.6g} after {result.n_evals} "
          f"evaluations ({result.reason})")
    return 0


def cmd_metrics(args) -> int:
    cfg, raw = _read_config(args.config, "metrics")

    def read_set(key) -> dict[str, list[StrideSeries]]:
        d = cfg.get(key)
        if not d:
            return {}
        files = list_stride_files(d)
        groups: dict[str, list[StrideSeries]] = {}
        for f in files:
            s = load_stride(f)
            groups.setdefault(s.label.code, []).append(s)
        return groups

    unassisted = read_set("unassisted")
    assisted = read_set("assisted")
    if not unassisted and not assisted:
        raise ConfigError("metrics needs at least one of unassisted/assisted")

    rows = []
    for code, strides in unassisted.items():
        rows.append(task_energetics(strides, "unassisted"))
    for code, strides in assisted.items():
        rows.append(task_energetics(strides, "assisted"))
    unmatched = set(unassisted) ^ set(assisted)
    if unassisted and assisted and unmatched:
        print(f"warning: unmatched task sets: {sorted(unmatched)}; "
              "report is partial", file=sys.stderr)

    summary = paired_summary(rows)
    with _Run(Path(args.out), raw, _resolve_seed(args.seed, cfg, 0)) as run:
        write_report(rows, run.path("report.csv"), run.header)
        header = ["task", "hip_work_unassisted", "hip_work_assisted",
                  "hip_work_change_pct", "lowerlimb_work_change_pct",
                  "peak_bio_power_change_pct", "peak_total_power_change_pct",
                  "sim", "mean_extension_scale"]
        out_rows = []
        for rec in summary:
            if rec.get("incomplete"):
                continue
            out_rows.append([rec["task"]] + [repr(rec[k]) for k in header[1:]])
        _write_csv(run.path("paired.csv"), header, out_rows, run.header)
    _print_paired(summary)
    return 0


def _print_paired(summary):
    print(f"{'task':<10} {'hip W+ un':>10} {'hip W+ ex':>10} {'change':>8}")
    for rec in summary:
        if rec.get("incomplete"):
            print(f"{rec['task']:<10} (incomplete pair)")
            continue
        print(f"{rec['task']:<10} {rec['hip_work_unassisted']:>10.4f} "
              f"{rec['hip_work_assisted']:>10.4f} "
              f"{rec['hip_work_change_pct']:>7.1f}%")


def cmd_detect_hs(args) -> int:
    cfg, raw = _read_config(args.config, "detect-hs")
    src = Path(cfg.get("input", ""))
    if not src.exists():
        raise ConfigError(f"input stream not found: {src}")
    rate = float(cfg.get("rate_hz", 250.0))
    det_cfg = HsDetectorConfig(**cfg.get("detector", {}))

    with open(src, newline="") as fh:
        reader = csv.DictReader(r for r in fh if not r.startswith("#"))
        required = ("t", "thigh_accel_l", "thigh_accel_r", "pelvis_accel",
                    "thigh_angle_l", "thigh_angle_r")
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"{src}: missing stream columns {missing}")
        stream = [{k: float(row[k]) for k in required} for row in reader]

    detector = HsDetector(rate, det_cfg)
    events = []
    for row in stream:
        frame = ImuFrame(row["thigh_accel_l"], row["thigh_accel_r"],
                         row["pelvis_accel"], row["t"])
        bilateral = BilateralSample.from_thighs(
            row["thigh_angle_l"], row["thigh_angle_r"], 0.0, row["t"])
        ev = detector.update(frame, bilateral)
        if ev is not None:
            events.append(ev)

    with _Run(Path(args.out), raw, _resolve_seed(args.seed, cfg, 0)) as run:
        _write_csv(run.path("events.csv"),
                   ["side", "timestamp", "source", "thigh_angle_l",
                    "thigh_angle_r", "theta_diff"],
                   [[e.side, repr(e.timestamp), e.source,
                     repr(e.thigh_snapshot.theta_thigh_l),
                     repr(e.thigh_snapshot.theta_thigh_r),
                     repr(e.thigh_snapshot.theta_diff)] for e in events],
                   run.header)

        if cfg.get("truth"):
            truth = []
            with open(cfg["truth"], newline="") as fh:
                reader = csv.DictReader(r for r in fh if not r.startswith("#"))
                for row in reader:
                    truth.append((row["side"], float(row["time"])))
            scores = match_events(events, truth,
                                  tol_s=float(cfg.get("match_tol_s", 0.03)))
            _write_csv(run.path("summary.csv"),
                       ["precision", "recall", "true_positives",
                        "detected", "truth"],
                       [[repr(scores["precision"]), repr(scores["recall"]),
                         str(scores["true_positives"]), str(len(events)),
                         str(len(truth))]], run.header)
            print(f"events={len(events)} precision={scores['precision']:.4f} "
                  f"recall={scores['recall']:.4f}")
        else:
            print(f"events={len(events)}")
    return 0


def cmd_report(args) -> int:
    rows = read_report(args.report)
    _print_paired(paired_summary(rows))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hipexo",
        description="Hip exoskeleton controller simulator, optimizer, and "
                    "energetics reporting")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_out=True):
        p = sub.add_parser(name)
        p.add_argument("--config", default="default")
        p.add_argument("--seed", type=int, default=None)
        if needs_out:
            p.add_argument("--out", required=True)
        p.set_defaults(fn=fn)
        return p

    add("simulate", cmd_simulate)
    add("optimize", cmd_optimize)
    add("metrics", cmd_metrics)
    add("detect-hs", cmd_detect_hs)
    rep = sub.add_parser("report")
    rep.add_argument("--report", required=True)
    rep.set_defaults(fn=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, LoadError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: report and signal exit 1
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
