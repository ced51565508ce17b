"""Command line interface.

Subcommands: run (single episode), sweep (Monte-Carlo grid over w, planner
kind and the prediction-step ablation), dataset (predictor training pairs),
replay (validate and summarize a stored trace). Exit code 0 on success.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import PLANNER_KINDS, ConfigError, ScenarioConfig, require_valid
from .harness import HarnessError, run_episode, run_monte_carlo
from .mapping import pgm_text
from .metrics import curves_csv_text, metrics_csv_text, summary_csv_text
from .predictor import generate_dataset
from .trace import (
    TraceError,
    check_geometry,
    checksum,
    decisions_csv_text,
    replay,
    write_trace,
)


def _parse_w(spec: str) -> tuple[str, float]:
    """'0'/'2'/'5' select a constant weight; 'decay:5' a linear decay."""
    spec = spec.strip()
    if spec.startswith("decay:"):
        return "linear_decay", float(spec.split(":", 1)[1])
    return "constant", float(spec)


def _w_label(mode: str, value: float) -> str:
    v = f"{value:g}"
    return f"wdecay{v}" if mode == "linear_decay" else f"w{v}"


def _load_config(args) -> ScenarioConfig:
    overrides = dict(kv.split("=", 1) for kv in (args.set or []))
    if args.config:
        cfg = config_mod.load(args.config, overrides)
    else:
        cfg = config_mod.parse(config_mod.serialize(ScenarioConfig()), overrides)
    kw = {}
    if getattr(args, "planner", None) and "," not in args.planner:
        kw["planner_kind"] = args.planner
    if getattr(args, "w", None) and "," not in args.w:
        kw["weight_mode"], kw["weight_value"] = _parse_w(args.w)
    if getattr(args, "no_prediction_step", False):
        kw["prediction_step"] = False
    if getattr(args, "snapshot_every", None) is not None:
        kw["snapshot_every_s"] = args.snapshot_every
    if kw:
        cfg = cfg.replace(**kw)
        require_valid(cfg)
    return cfg


def _write_snapshots(trace, cfg: ScenarioConfig, out: Path) -> None:
    if not trace.snapshots:
        return
    d = out / "snapshots"
    d.mkdir(exist_ok=True)
    for snap in trace.snapshots:
        p = np.array(snap.probabilities, dtype=np.float64)
        text = pgm_text(p, 0.0, 0.0, cfg.cell_dx, cfg.cell_dy, snap.t)
        (d / f"t_{int(round(snap.t)):06d}.pgm").write_text(text, encoding="utf-8")


def cmd_run(args) -> int:
    cfg = _load_config(args)
    seed = args.seed if args.seed is not None else cfg.rng_seed
    walls: list[float] = []
    trace = run_episode(cfg, seed, on_decision=lambda t, r: walls.append(r.wall_s))
    final = trace.steps[-1].metrics
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        config_mod.save(cfg, out / "config.ini")
        write_trace(trace, out / "trace.jsonl")
        (out / "metrics.csv").write_text(metrics_csv_text(trace), encoding="utf-8")
        (out / "decisions.csv").write_text(
            decisions_csv_text(trace, walls), encoding="utf-8"
        )
        _write_snapshots(trace, cfg, out)
    print(
        f"seed={seed} steps={len(trace.steps)} H={final.H:.4f} mse={final.mse:.4f} "
        f"mean_detections={final.mean_detections:.4f} checksum={checksum(trace)[:12]}"
    )
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    seed0 = args.seed if args.seed is not None else cfg.rng_seed
    w_axis = (
        [_parse_w(s) for s in args.w.split(",")]
        if args.w
        else [(cfg.weight_mode, cfg.weight_value)]
    )
    p_axis = args.planner.split(",") if args.planner else [cfg.planner_kind]
    if args.prediction == "both":
        pred_axis = [True, False]
    elif args.prediction == "off":
        pred_axis = [False]
    elif args.prediction == "on":
        pred_axis = [True]
    else:
        pred_axis = [cfg.prediction_step]
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    rows = []
    for (mode, value), kind, pred in itertools.product(w_axis, p_axis, pred_axis):
        arm_cfg = cfg.replace(
            weight_mode=mode, weight_value=value, planner_kind=kind, prediction_step=pred
        )
        require_valid(arm_cfg)
        label = f"{_w_label(mode, value)}__{kind}__pred_{'on' if pred else 'off'}"
        result = run_monte_carlo(arm_cfg, args.trials, seed0, workers=args.workers)
        s = result.summary
        rows.append((label, s))
        print(
            f"{label}: n={s.n_trials} H={s.h_mean:.4f}+/-{s.h_std:.4f} "
            f"mse={s.mse_mean:.4f}+/-{s.mse_std:.4f} "
            f"det={s.det_mean:.4f}+/-{s.det_std:.4f}"
        )
        if out:
            arm_dir = out / label
            arm_dir.mkdir(exist_ok=True)
            config_mod.save(arm_cfg, arm_dir / "config.ini")
            (arm_dir / "summary.csv").write_text(
                summary_csv_text([(label, s)]), encoding="utf-8"
            )
            (arm_dir / "curves.csv").write_text(curves_csv_text(s), encoding="utf-8")
            for trace in result.traces:
                (arm_dir / f"trial_{trace.seed}.csv").write_text(
                    metrics_csv_text(trace), encoding="utf-8"
                )
    if out:
        (out / "summary.csv").write_text(summary_csv_text(rows), encoding="utf-8")
    return 0


def cmd_dataset(args) -> int:
    cfg = _load_config(args)
    seed = args.seed if args.seed is not None else cfg.rng_seed
    out = generate_dataset(cfg, args.samples, seed, args.out)
    print(f"wrote {args.samples} samples to {out}")
    return 0


def cmd_replay(args) -> int:
    trace = replay(args.trace)
    if args.config:
        cfg = config_mod.load(args.config)
        geom = cfg.geometry()
        check_geometry(trace, geom.rows, geom.cols)
        if config_mod.config_hash(cfg) != trace.config_hash:
            raise TraceError("trace was recorded under a different configuration")
    final = trace.steps[-1].metrics if trace.steps else None
    line = f"seed={trace.seed} steps={len(trace.steps)} checksum={checksum(trace)[:12]}"
    if final:
        line += (
            f" H={final.H:.4f} mse={final.mse:.4f} mean_detections={final.mean_detections:.4f}"
        )
    print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="driftplan", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="scenario config file (defaults built in)")
        p.add_argument("--seed", type=int, help="episode seed / first sweep seed")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a single config key (repeatable)",
        )

    p_run = sub.add_parser("run", help="run a single episode")
    common(p_run)
    p_run.add_argument("--planner", choices=PLANNER_KINDS)
    p_run.add_argument("--w", help="tracking weight: a number, or decay:W0")
    p_run.add_argument("--no-prediction-step", action="store_true")
    p_run.add_argument("--snapshot-every", type=float, metavar="S")
    p_run.add_argument("--out", help="artifact directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo sweep / ablation grid")
    common(p_sweep)
    p_sweep.add_argument("--trials", type=int, default=20)
    p_sweep.add_argument("--planner", help="comma-separated planner kinds")
    p_sweep.add_argument("--w", help="comma-separated weight specs (e.g. 0,2,5,decay:5)")
    p_sweep.add_argument(
        "--prediction", choices=["on", "off", "both"], help="prediction-step arm(s)"
    )
    p_sweep.add_argument("--no-prediction-step", action="store_true")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", help="artifact directory")
    p_sweep.set_defaults(func=cmd_sweep)

    p_data = sub.add_parser("dataset", help="export predictor training pairs")
    common(p_data)
    p_data.add_argument("--samples", type=int, required=True)
    p_data.add_argument("--out", required=True)
    p_data.set_defaults(func=cmd_dataset)

    p_replay = sub.add_parser("replay", help="validate and summarize a trace file")
    p_replay.add_argument("--trace", required=True)
    p_replay.add_argument("--config", help="check the trace against this config")
    p_replay.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceError, HarnessError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
