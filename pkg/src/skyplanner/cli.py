"""Command-line entry point: ``skyplanner {plan,simulate,sweep}``.

Exit codes: 0 success, 1 invalid arguments or configuration, 2 infeasible
experiment (no feasible trial, or an infeasible single plan).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from skyplanner import __version__
from skyplanner.config import apply_overrides, load_config, planner_config
from skyplanner.errors import EnumerationCapError, InfeasibleTripError, InvalidParameterError, NoRelayError
from skyplanner.geometry import sample_scene
from skyplanner.harness import (
    ExperimentConfig,
    TrialRecord,
    atomic_write,
    feasible,
    run_trials,
    summarize,
    write_csv,
    write_records_json,
    write_summary,
)
from skyplanner.planner import OBJECTIVES, plan_pair

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2
HIST_BINS = 50
SWEEP_AXES = {
    "sd_distance": ("scene", "sd_distance"),
    "battery_wh": ("power", "battery_wh"),
    "n1": ("experiment", "n1"),
    "n2": ("experiment", "n2"),
    "lambda_tbs": ("scene", "lambda_tbs"),
    "lambda_type1": ("scene", "lambda_type1"),
    "lambda_type2": ("scene", "lambda_type2"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config; missing keys fall back to the built-in defaults")
    common.add_argument("--seed", type=int, help="root seed (scene seed for plan)")
    common.add_argument("--trials", type=int)
    common.add_argument("--objective", choices=[*OBJECTIVES, "both"])
    common.add_argument("--sd-distance", type=float, dest="sd_distance", help="S-D distance in meters")
    common.add_argument("--n1", type=int)
    common.add_argument("--n2", type=int)
    common.add_argument("--battery-wh", type=float, dest="battery_wh")
    common.add_argument("--out-dir", default=".", help="output directory (created if missing)")
    common.add_argument("--format", choices=["csv", "json"], default="csv", help="format of per-trial records")
    common.add_argument("--trace", action="store_true", help="include full plan traces")
    common.add_argument("--workers", type=int, help="worker processes (default: SKYPLANNER_THREADS or CPU count)")

    parser = _Parser(prog="skyplanner", description="Multi-purpose delivery UAV planner")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("plan", parents=[common], help="plan one scene")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo trials at one configuration")
    sw = sub.add_parser("sweep", parents=[common], help="Monte Carlo trials along one parameter axis")
    sw.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sw.add_argument("--values", required=True, help="comma-separated axis values")
    return parser


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _histogram_csv(series: Mapping[str, Sequence[float]]) -> str:
    """Shared 50-bin edges from the pooled min/max; one count column per series."""
    pooled = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, HIST_BINS + 1)
    counts = {k: np.histogram(np.asarray(v, dtype=float), bins=edges)[0] for k, v in series.items()}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", *series])
    for i in range(HIST_BINS):
        w.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), *(int(counts[k][i]) for k in series)])
    return buf.getvalue()


def emit_plot_data(series: Mapping[str, Sequence[TrialRecord]], out_dir, trend: Sequence[dict] | None = None) -> list[Path]:
    """Histogram files for round-trip time and data, plus the efficiency trend table.

    Args:
        series: label -> records; each label becomes a count column.
        out_dir: destination directory.
        trend: rows for efficiency_trend.csv (axis, value, objective, xi, feasible).

    Raises:
        InfeasibleTripError: no feasible record to histogram.
    """
    out_dir = Path(out_dir)
    ok = {k: feasible(v) for k, v in series.items()}
    if not any(ok.values()):
        raise InfeasibleTripError("no feasible records to plot")
    written = []
    for name, col in (("hist_round_trip.csv", "round_trip_s"), ("hist_data.csv", "data_bithz")):
        data = {k: [getattr(r, col) for r in v] for k, v in ok.items()}
        atomic_write(out_dir / name, _histogram_csv(data))
        written.append(out_dir / name)
    if trend is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis", "value", "objective", "xi", "feasible", "trials"])
        for row in trend:
            w.writerow([row["axis"], row["value"], row["objective"], repr(row["xi"]) if row["xi"] is not None else "",
                        row["feasible"], row["trials"]])
        atomic_write(out_dir / "efficiency_trend.csv", buf.getvalue())
        written.append(out_dir / "efficiency_trend.csv")
    return written


def _trend_rows(axis: str, value, summary: dict) -> list[dict]:
    return [{"axis": axis, "value": value, "objective": obj, "xi": e["xi"], "feasible": e["feasible"],
             "trials": e["trials"]} for obj, e in summary["objectives"].items()]


def _write_records(records, out_dir: Path, stem: str, fmt: str) -> None:
    if fmt == "csv":
        write_csv(records, out_dir / f"{stem}.csv")
    else:
        write_records_json(records, out_dir / f"{stem}.json")


def _cmd_plan(cfg: dict, args) -> int:
    pc = planner_config(cfg)
    seed = int(cfg["experiment"]["seed"])
    scene = sample_scene(pc.scene, seed)
    try:
        plans = plan_pair(scene, pc)
    except (InfeasibleTripError, NoRelayError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = Path(args.out_dir)
    for obj in cfg["experiment"]["objectives"]:
        plan = plans[obj]
        if args.trace:
            doc = {"scene": json.loads(scene.to_json()), **plan.to_trace()}
        else:
            doc = {"objective": obj, "seed": seed, "route": plan.route.to_dict(), "s": list(plan.decisions),
                   "ledger": plan.ledger.to_dict()}
        atomic_write(out / f"plan_{obj}.json", json.dumps(doc, indent=2) + "\n")
        L = plan.ledger
        print(f"{obj}: round trip {L.T_total:.1f} s, data {L.M_total:.1f} bit/Hz, energy {L.E_total:.1f} J")
    return EXIT_OK


def _cmd_simulate(cfg: dict, args) -> int:
    exp = ExperimentConfig.from_dict(cfg)
    records = run_trials(exp, workers=args.workers)
    out = Path(args.out_dir)
    summary = summarize(records, exp.planner)
    summary["config"] = cfg
    if not feasible(records):
        write_summary(summary, out / "summary.json", _timestamp())
        print("no feasible trial", file=sys.stderr)
        return EXIT_INFEASIBLE
    _write_records(records, out, "trials", args.format)
    write_summary(summary, out / "summary.json", _timestamp())
    series = {o: [r for r in records if r.objective == o] for o in exp.objectives}
    emit_plot_data(series, out, _trend_rows("none", "", summary))
    for obj, e in summary["objectives"].items():
        print(f"{obj}: xi={e['xi']:.4f} over {e['feasible']}/{e['trials']} feasible trials")
    return EXIT_OK


def _parse_values(text: str, axis: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError("--values is empty")
    if axis in ("n1", "n2"):
        if any(v != int(v) for v in vals):
            raise UsageError(f"{axis} values must be integers")
        vals = [int(v) for v in vals]
    return vals


def _cmd_sweep(cfg: dict, args) -> int:
    values = _parse_values(args.values, args.axis)
    block, key = SWEEP_AXES[args.axis]
    out = Path(args.out_dir)
    trend, series, any_ok = [], {}, False
    for v in values:
        local = json.loads(json.dumps(cfg))
        local[block][key] = v
        exp = ExperimentConfig.from_dict(local)
        records = run_trials(exp, workers=args.workers)
        summary = summarize(records, exp.planner)
        summary["axis"] = {"name": args.axis, "value": v}
        tag = f"{args.axis}_{v:g}"
        if feasible(records):
            any_ok = True
            _write_records(records, out, f"trials_{tag}", args.format)
        write_summary(summary, out / f"summary_{tag}.json", _timestamp())
        trend.extend(_trend_rows(args.axis, v, summary))
        for o in exp.objectives:
            series[f"{tag}/{o}"] = [r for r in records if r.objective == o]
        for obj, e in summary["objectives"].items():
            xi = "n/a" if e["xi"] is None else f"{e['xi']:.4f}"
            print(f"{args.axis}={v:g} {obj}: xi={xi} ({e['feasible']}/{e['trials']} feasible)")
    if not any_ok:
        return EXIT_INFEASIBLE
    emit_plot_data(series, out, trend)
    return EXIT_OK


def resolve_config(args: argparse.Namespace) -> dict:
    """Built-in defaults, then the config file, then command-line flags."""
    cfg = load_config(args.config)
    return apply_overrides(cfg, seed=args.seed, trials=args.trials, objective=args.objective,
                           sd_distance=args.sd_distance, n1=args.n1, n2=args.n2, battery_wh=args.battery_wh)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.workers is not None and args.workers < 1:
            raise UsageError("--workers must be >= 1")
        handler = {"plan": _cmd_plan, "simulate": _cmd_simulate, "sweep": _cmd_sweep}[args.command]
        return handler(cfg, args)
    except (UsageError, InvalidParameterError, EnumerationCapError) as exc:
        print(f"skyplanner: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleTripError as exc:
        print(f"skyplanner: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
