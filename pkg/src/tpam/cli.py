"""Command line: ``tpam run``, ``tpam validate`` and ``tpam report``."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import DePlan, ExperimentPlan, PlanError, load_plan
from .experiment import report, run_experiment, run_validation


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="base seed; run r uses seed + r")
    p.add_argument("--runs", type=int, help="independent runs per cell")
    p.add_argument("--trace", action="store_true", help="also write per-run traces")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", type=Path, help="output root, overrides the plan's output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpam", description="Target-tracking benchmark for DE parameter adaptation methods.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a tracking experiment grid")
    run.add_argument("plan", nargs="?", type=Path,
                     help="TOML plan; omitted means the default grid")
    _add_common(run)
    run.add_argument("--strict-pseudocode", action="store_true",
                     help="run t_max - 1 iterations per run")

    val = sub.add_parser("validate", help="run adaptive DE on benchmark functions")
    val.add_argument("plan", nargs="?", type=Path, help="TOML validation plan")
    _add_common(val)

    rep = sub.add_parser("report", help="re-aggregate saved results in a directory")
    rep.add_argument("dir", type=Path)
    return parser


def _load(path, kind, args):
    plan = load_plan(path, kind)
    if kind is ExperimentPlan:
        sim = plan.sim
        if args.seed is not None:
            sim = dataclasses.replace(sim, base_seed=args.seed)
        if args.runs is not None:
            sim = dataclasses.replace(sim, runs=args.runs)
        if args.strict_pseudocode:
            sim = dataclasses.replace(sim, strict_pseudocode=True)
        plan = dataclasses.replace(plan, sim=sim)
    else:
        if args.seed is not None:
            plan = dataclasses.replace(plan, base_seed=args.seed)
        if args.runs is not None:
            plan = dataclasses.replace(plan, runs=args.runs)
    if args.out is not None:
        plan = dataclasses.replace(plan, output_dir=str(args.out))
    return plan.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        try:
            report(args.dir)
        except FileNotFoundError as exc:
            print(f"tpam report: {exc}", file=sys.stderr)
            return 2
        return 0

    kind = ExperimentPlan if args.command == "run" else DePlan
    if args.jobs < 1:
        print(f"tpam {args.command}: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        plan = _load(args.plan, kind, args)
    except PlanError as exc:
        print(f"tpam {args.command}: invalid plan field {exc.field!r}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"tpam {args.command}: {exc}", file=sys.stderr)
        return 2

    outdir = Path(plan.output_dir) / plan.name
    trace = args.trace or None
    if kind is ExperimentPlan:
        outcome = run_experiment(plan, outdir, jobs=args.jobs, trace=trace)
    else:
        outcome = run_validation(plan, outdir, jobs=args.jobs, trace=trace)
    print(f"results written to {outdir}", file=sys.stderr)
    return 0 if outcome.complete else 130


if __name__ == "__main__":
    sys.exit(main())
