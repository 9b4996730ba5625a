"""Grid experiments, DE validation runs and re-aggregation of saved results."""
from __future__ import annotations

import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    CellKey,
    ExperimentSummary,
    ParamLog,
    RunRecord,
    SuccessProfile,
    aggregate,
    fmt,
    pooled_profile,
    read_runs_csv,
    smoothed_success_trajectory,
    write_runs_csv,
    write_summary_csv,
)
from .config import DePlan, ExperimentPlan, dump_plan
from .de import DeConfig, run_adaptive_de
from .pam import PamKind
from .simulation import LogLevel, SimConfig, simulate_run, write_meta_csv, write_trace_csv
from .targets import TargetSpec

__all__ = [
    "ExperimentOutcome",
    "ValidationOutcome",
    "report",
    "run_experiment",
    "run_validation",
]

INCOMPLETE = "INCOMPLETE"


def _log(msg: str, stream) -> None:
    # True means "the current stderr", resolved late so redirection works
    if stream is True:
        stream = sys.stderr
    if stream:
        print(msg, file=stream, flush=True)


def _cell_slug(key: CellKey) -> str:
    parts = [key.pam, key.family]
    if key.omega is not None:
        parts.append(f"w{fmt(key.omega)}")
    if key.step is not None:
        parts.append(f"s{fmt(key.step)}")
    parts.append(f"p{fmt(key.p_max)}")
    return "_".join(parts)


def _run_cell(job) -> list[RunRecord]:
    """Worker: all runs of one cell. Rates are rounded to their CSV form so a
    re-aggregation from runs.csv reproduces summary.csv exactly."""
    key, target, hyper, sim, runs, base_seed, trace_dir = job
    level = LogLevel.FULL_TRACE if trace_dir else LogLevel.SUMMARY
    out = []
    for r in range(runs):
        seed = base_seed + r
        cfg = SimConfig(p_max=key.p_max, seed=seed, log_level=level, **sim)
        res = simulate_run(key.pam, hyper, target, cfg)
        if trace_dir:
            stem = Path(trace_dir) / f"{_cell_slug(key)}_run{r:03d}"
            write_trace_csv(res, f"{stem}.csv")
            write_meta_csv(res, f"{stem}_meta.csv")
        out.append(RunRecord(key, r, seed, float(fmt(res.r_succ))))
    return out


@dataclass
class ExperimentOutcome:
    summary: ExperimentSummary
    records: list[RunRecord]
    complete: bool
    outdir: Path | None = None


def _finish(records, outdir: Path | None, complete: bool) -> ExperimentSummary:
    summary = aggregate(records) if records else ExperimentSummary([])
    if outdir is not None:
        write_runs_csv(records, outdir / "runs.csv")
        write_summary_csv(summary, outdir / "summary.csv")
        marker = outdir / INCOMPLETE
        if complete:
            marker.unlink(missing_ok=True)
        else:
            marker.write_text("interrupted before all cells finished; summary is partial\n")
    return summary


def run_experiment(plan: ExperimentPlan, outdir=None, jobs: int = 1, trace: bool | None = None,
                   progress=True) -> ExperimentOutcome:
    """Run every (PAM, target instance, p_max) cell of ``plan``.

    Run ``r`` of every cell uses seed ``base_seed + r``. With ``outdir`` the
    results go to ``outdir/summary.csv`` and ``outdir/runs.csv`` (plus
    per-run traces under ``traces/`` when tracing). If interrupted, the
    partial results are written together with an ``INCOMPLETE`` marker.
    """
    plan.validate()
    trace = plan.sim.trace if trace is None else trace
    s = plan.sim
    sim = dict(n=s.n, t_max=s.t_max, alpha=s.alpha, mode=s.mode,
               distance=s.distance, strict_pseudocode=s.strict_pseudocode)
    f_spec = plan.f_target_spec()

    trace_dir = None
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "plan.toml").write_text(dump_plan(plan))
        if trace:
            trace_dir = outdir / "traces"
            trace_dir.mkdir(exist_ok=True)
    elif trace:
        raise ValueError("tracing needs an output directory")

    cells = plan.cells()
    jobs_list = []
    for key, spec in cells:
        target: TargetSpec | tuple = spec if f_spec is None else (f_spec, spec)
        jobs_list.append((key, target, plan.hyper, sim, s.runs, s.base_seed,
                          str(trace_dir) if trace_dir else None))

    records: list[RunRecord] = []
    done = 0
    complete = False
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        results = pool.map(_run_cell, jobs_list) if pool else map(_run_cell, jobs_list)
        for (key, _), recs in zip(cells, results):
            records += recs
            done += 1
            med = float(np.median([r.r_succ for r in recs]))
            _log(f"[{done}/{len(cells)}] {_cell_slug(key)} median r_succ={med:.4f}", progress)
        complete = True
    except KeyboardInterrupt:
        _log(f"interrupted after {done}/{len(cells)} cells", progress)
    finally:
        if pool is not None:
            pool.shutdown(wait=complete, cancel_futures=True)
        summary = _finish(records, outdir, complete)
    return ExperimentOutcome(summary, records, complete, outdir)


FINAL_HEADER = ["function", "dim", "pam", "mutation", "crossover", "run", "seed",
                "final_error", "evals", "generations"]


@dataclass
class ValidationOutcome:
    rows: list[dict]
    profiles: dict[tuple[str, int, str], dict[str, SuccessProfile]] = field(default_factory=dict)
    complete: bool = True
    outdir: Path | None = None


def _de_run(job):
    cfg, window = job
    tr = run_adaptive_de(cfg)
    curves = {}
    for comp in ("F", "C"):
        log = ParamLog.from_de_trace(tr, comp)
        if log.success.any():
            w = window or None
            curves[comp] = (log, smoothed_success_trajectory(log, w, tr.generations))
    return tr, curves


def run_validation(plan: DePlan, outdir=None, jobs: int = 1, trace: bool | None = None,
                   progress=True) -> ValidationOutcome:
    """Adaptive DE on the plan's benchmarks.

    Writes ``final.csv`` (one row per run), ``best/`` convergence curves,
    pooled success-vs-distance profiles ``profile_<cell>_<F|C>.csv`` and,
    when tracing, per-run ``params/`` logs.
    """
    plan.validate()
    trace = plan.trace if trace is None else trace
    if outdir is not None:
        outdir = Path(outdir)
        (outdir / "best").mkdir(parents=True, exist_ok=True)
        if trace:
            (outdir / "params").mkdir(exist_ok=True)
        (outdir / "plan.toml").write_text(dump_plan(plan))

    outcome = ValidationOutcome([], outdir=outdir)
    cells = [(fn, int(d), PamKind.parse(p).label)
             for fn in plan.functions for d in plan.dims for p in plan.pams]
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for ci, (fn, d, pam) in enumerate(cells, start=1):
            cfgs = [DeConfig(function=fn, dim=d, n=plan.n or None,
                             max_evals=plan.evals_per_dim * d, mutation=plan.mutation,
                             crossover=plan.crossover, p=plan.p, bounds=tuple(plan.bounds),
                             pam=pam, hyper=plan.hyper, seed=plan.base_seed + r,
                             target_error=plan.target_error or None)
                    for r in range(plan.runs)]
            jobs_list = [(c, plan.window) for c in cfgs]
            results = pool.map(_de_run, jobs_list) if pool else map(_de_run, jobs_list)
            pairs: dict[str, list] = {"F": [], "C": []}
            stem = f"{fn}_D{d}_{pam}"
            errors = []
            for r, (tr, curves) in enumerate(results):
                outcome.rows.append(dict(
                    function=fn, dim=d, pam=pam, mutation=cfgs[r].mutation.value,
                    crossover=cfgs[r].crossover.value, run=r, seed=cfgs[r].seed,
                    final_error=tr.final_error, evals=tr.evals, generations=tr.generations))
                errors.append(tr.final_error)
                for comp, pair in curves.items():
                    pairs[comp].append(pair)
                if outdir is not None:
                    tr.write_best_csv(outdir / "best" / f"{stem}_run{r:03d}.csv")
                    if trace:
                        tr.write_params_csv(outdir / "params" / f"{stem}_run{r:03d}.csv")
            profiles = {comp: pooled_profile(p, plan.n_bins) for comp, p in pairs.items() if p}
            outcome.profiles[(fn, d, pam)] = profiles
            if outdir is not None:
                for comp, prof in profiles.items():
                    prof.write_csv(outdir / f"profile_{stem}_{comp}.csv")
            _log(f"[{ci}/{len(cells)}] {stem} median final error={np.median(errors):.3e}", progress)
    except KeyboardInterrupt:
        outcome.complete = False
        _log("interrupted; final.csv is partial", progress)
    finally:
        if pool is not None:
            pool.shutdown(wait=outcome.complete, cancel_futures=True)
        if outdir is not None:
            write_final_csv(outcome.rows, outdir / "final.csv")
            marker = outdir / INCOMPLETE
            if outcome.complete:
                marker.unlink(missing_ok=True)
            else:
                marker.write_text("interrupted before all runs finished\n")
    return outcome


def write_final_csv(rows, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FINAL_HEADER)
        for row in rows:
            w.writerow([fmt(row[h]) if isinstance(row[h], float) else row[h] for h in FINAL_HEADER])


def read_final_csv(path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in ("dim", "run", "seed", "evals", "generations"):
            row[k] = int(row[k])
        row["final_error"] = float(row["final_error"])
    return rows


def report(directory, out=None) -> ExperimentSummary | None:
    """Recompute ``summary.csv`` from ``runs.csv`` and/or ``final_summary.csv``
    from ``final.csv`` in ``directory`` and print a short table."""
    out = out or sys.stdout
    d = Path(directory)
    runs_path, final_path = d / "runs.csv", d / "final.csv"
    if not runs_path.exists() and not final_path.exists():
        raise FileNotFoundError(f"{d}: neither runs.csv nor final.csv found")
    summary = None
    if runs_path.exists():
        summary = aggregate(read_runs_csv(runs_path))
        write_summary_csv(summary, d / "summary.csv")
        print(f"{'cell':<40} {'runs':>5} {'mean':>9} {'median':>9} {'std':>9}", file=out)
        for c in summary.cells:
            print(f"{_cell_slug(c.cell):<40} {c.runs:>5} {c.mean:>9.4f} {c.median:>9.4f} "
                  f"{c.std:>9.4f}", file=out)
    if final_path.exists():
        rows = read_final_csv(final_path)
        groups: dict[tuple, list[float]] = {}
        for row in rows:
            groups.setdefault((row["function"], row["dim"], row["pam"]), []).append(row["final_error"])
        with open(d / "final_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["function", "dim", "pam", "runs", "median_error", "mean_error"])
            for key in sorted(groups):
                e = np.asarray(groups[key])
                w.writerow([*key, e.size, fmt(float(np.median(e))), fmt(float(np.mean(e)))])
                print(f"{key[0]} D={key[1]} {key[2]}: median final error {np.median(e):.3e} "
                      f"over {e.size} runs", file=out)
    if (d / INCOMPLETE).exists():
        print("warning: results are marked INCOMPLETE", file=out)
    return summary
