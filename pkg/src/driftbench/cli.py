"""Command-line surface: synth, induce, run, sweep.

Every subcommand is deterministic given its full flag set including --seed
(falling back to the DRIFTBENCH_SEED environment variable). Exit codes:
0 success, 2 usage error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import harness
from .data import Dataset, load_csv
from .errors import DataFormatError, DriftBenchError, ParameterError
from .harness import (
    DEFAULT_TABLE8_SEED,
    DETECTORS,
    RunConfig,
    run_stream,
    run_suite,
    write_report_json,
    write_summary_csv,
    write_trace_csv,
)
from .induction import InductionPlan, induce, rotate_features
from .models import TrainConfig
from .synth import ScenarioId, generate_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

LABEL_COLUMN = "class"


def _seed_default(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("DRIFTBENCH_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"DRIFTBENCH_SEED must be an integer, got {env!r}") from None
    return 0


def _check_overwrite(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise ParameterError(f"{path} exists; pass --force to overwrite")


def _write_dataset_csv(path: Path, data: Dataset) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.feature_names) + [LABEL_COLUMN])
        for i in range(len(data)):
            row = [f"{v:.6f}" for v in data.X[i]]
            row.append(str(int(data.y[i])))
            writer.writerow(row)


def _load_labeled(args) -> Dataset:
    return load_csv(args.input, args.label_column, args.positive_label)


def cmd_synth(args) -> int:
    scenario = ScenarioId.parse(args.scenario)
    seed = _seed_default(args.seed)
    out = Path(args.out)
    _check_overwrite(out, args.force)
    data = generate_scenario(scenario, args.n, seed)
    _write_dataset_csv(out, data)
    print(f"wrote {len(data)} rows x {data.d} features to {out}")
    return EXIT_OK


def cmd_induce(args) -> int:
    data = _load_labeled(args)
    out = Path(args.out)
    _check_overwrite(out, args.force)
    if args.plan:
        plan = InductionPlan.from_dict(json.loads(Path(args.plan).read_text("utf-8")))
        induced = rotate_features(data, plan)
    else:
        if not 0.0 < args.fraction <= 1.0:
            raise ParameterError(f"--fraction must be in (0, 1], got {args.fraction}")
        induced, plan = induce(
            data,
            mode=args.mode,
            fraction=args.fraction,
            change_point=args.change_point,
            target_class=args.target_class,
            bins=args.bins,
        )
    _write_dataset_csv(out, induced)
    if not args.plan or args.plan_out:
        plan_out = Path(args.plan_out) if args.plan_out else out.with_suffix(".plan.json")
        _check_overwrite(plan_out, args.force)
        doc = plan.to_dict()
        doc["seed"] = _seed_default(args.seed)
        plan_out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
        print(f"wrote induced dataset to {out} and plan to {plan_out}")
    else:
        print(f"wrote induced dataset to {out} (re-applied {args.plan})")
    print(f"rotated features: {list(plan.feature_subset)}")
    return EXIT_OK


def _run_config(args, seed: int) -> RunConfig:
    return RunConfig(
        detector=args.detector,
        chunk=args.chunk,
        n_train=args.n_train,
        theta=args.theta,
        theta_margin=args.theta_margin,
        initial_fraction=args.initial_fraction,
        seed=seed,
        prediction=TrainConfig(kind="svm", C=args.svm_c),
    )


def cmd_run(args) -> int:
    data = _load_labeled(args)
    seed = _seed_default(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.detectors:
        detectors = [d.strip() for d in args.detectors.split(",") if d.strip()]
        for d in detectors:
            if d not in DETECTORS:
                raise ParameterError(f"unknown detector {d!r}; valid: {', '.join(DETECTORS)}")
        config = _run_config(args, seed)
        config.detector = detectors[0]
        summary_path = out_dir / "summary.csv"
        _check_overwrite(summary_path, args.force)
        reports, rows = run_suite(
            [(Path(args.input).stem, data)], detectors, config, jobs=args.jobs
        )
        write_summary_csv(summary_path, rows)
        for report in reports:
            trace = out_dir / f"trace_{report.detector}.csv"
            rep = out_dir / f"report_{report.detector}.json"
            _check_overwrite(trace, args.force)
            _check_overwrite(rep, args.force)
            write_trace_csv(trace, report)
            write_report_json(rep, report)
        print(f"wrote {len(reports)} runs to {out_dir}")
        return EXIT_OK

    config = _run_config(args, seed)
    trace_path = out_dir / "trace.csv"
    report_path = out_dir / "report.json"
    _check_overwrite(trace_path, args.force)
    _check_overwrite(report_path, args.force)
    report = run_stream(data, config)
    write_trace_csv(trace_path, report)
    write_report_json(report_path, report)
    print(
        f"{report.detector}: accuracy={report.final_accuracy:.4f} "
        f"drifts={report.drifts_confirmed} false_alarms={report.false_alarms} "
        f"labeling={report.labeling_percent:.1f}%"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / "summary.csv"
    _check_overwrite(summary_path, args.force)

    if args.kind == "table8":
        seed = args.seed if args.seed is not None else int(
            os.environ.get("DRIFTBENCH_SEED", DEFAULT_TABLE8_SEED)
        )
        rows, firsts = harness.table8_sweep(seed=seed)
        for row in rows:
            for key in ("delta_err", "delta_md", "delta_uncertain", "delta_hd"):
                row[key] = round(row[key], 6)
        write_summary_csv(summary_path, rows)
        (out_dir / "first_detection.json").write_text(
            json.dumps(firsts, indent=2, sort_keys=True) + "\n", "utf-8"
        )
        print(f"wrote {len(rows)} rows to {summary_path}; first detections: {firsts}")
        return EXIT_OK

    if not args.input:
        raise ParameterError(f"--in is required for --kind {args.kind}")
    if not args.values:
        raise ParameterError("--values is required for this sweep kind")
    values = [float(v) for v in args.values.split(",") if v.strip()]
    data = _load_labeled(args)
    seed = _seed_default(args.seed)
    config = RunConfig(
        detector=args.detector,
        chunk=args.chunk,
        n_train=args.n_train,
        theta=args.theta,
        theta_margin=args.theta_margin,
        initial_fraction=args.initial_fraction,
        seed=seed,
        prediction=TrainConfig(kind="svm", C=args.svm_c),
    )
    if args.kind == "margin-width":
        rows = harness.margin_width_sweep(data, values, config)
    else:  # sensitivity
        rows = harness.sensitivity_sweep(data, values, config)
    write_summary_csv(summary_path, rows)
    print(f"wrote {len(rows)} rows to {summary_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftbench",
        description="Margin-density drift detection benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scenario as CSV")
    p.add_argument("--scenario", required=True, help="a0..a4, b0, b1, c0, c1 or hd20:<i>")
    p.add_argument("--n", type=int, default=500, help="samples per class")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("induce", help="rank features and rotate a subset after a change point")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--label-column", default=LABEL_COLUMN)
    p.add_argument("--positive-label", default="1")
    p.add_argument("--mode", choices=["top", "bottom"], default="top")
    p.add_argument("--fraction", type=float, default=0.25)
    p.add_argument("--change-point", type=float, default=0.5)
    p.add_argument("--target-class", type=int, default=-1, choices=[-1, 1])
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--plan", default=None, help="re-apply a stored plan JSON instead of ranking")
    p.add_argument("--plan-out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("run", help="prequential run of one detector (or a suite) over a CSV stream")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--label-column", default=LABEL_COLUMN)
    p.add_argument("--positive-label", default="1")
    p.add_argument("--detector", choices=list(DETECTORS), default="md3-rs")
    p.add_argument("--detectors", default=None, help="comma list; runs a suite with summary.csv")
    p.add_argument("--chunk", type=int, default=None)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--theta-margin", type=float, default=0.5)
    p.add_argument("--initial-fraction", type=float, default=0.15)
    p.add_argument("--svm-c", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="parameter sweeps: table8, margin-width, sensitivity")
    p.add_argument("--kind", choices=["table8", "margin-width", "sensitivity"], required=True)
    p.add_argument("--in", dest="input", default=None)
    p.add_argument("--label-column", default=LABEL_COLUMN)
    p.add_argument("--positive-label", default="1")
    p.add_argument("--values", default=None, help="comma list of sweep values")
    p.add_argument("--detector", choices=list(DETECTORS), default="md3-rs")
    p.add_argument("--chunk", type=int, default=None)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--theta-margin", type=float, default=0.5)
    p.add_argument("--initial-fraction", type=float, default=0.15)
    p.add_argument("--svm-c", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, DriftBenchError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
