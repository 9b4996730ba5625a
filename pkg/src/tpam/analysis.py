"""Aggregation, statistical comparison and success-vs-distance profiles."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "CellKey",
    "CellStats",
    "ComparisonVerdict",
    "ExperimentSummary",
    "ParamLog",
    "RunRecord",
    "SuccessProfile",
    "aggregate",
    "compare",
    "distance_to_curve",
    "pooled_profile",
    "profile_from_distances",
    "read_runs_csv",
    "read_summary_csv",
    "smoothed_success_trajectory",
    "success_prob_vs_distance",
    "summarize",
    "write_runs_csv",
    "write_summary_csv",
]


def fmt(x) -> str:
    """Floats with 9 significant digits; None and NaN become empty fields."""
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else f"{x:.9g}"
    return str(x)


def _opt_float(s: str):
    return None if s == "" else float(s)


class CellKey(NamedTuple):
    """One grid cell. ``omega``/``step`` are None for families that ignore them."""

    pam: str
    family: str
    omega: float | None
    step: float | None
    p_max: float

    def sort_key(self):
        return (self.pam, self.family,
                -1.0 if self.omega is None else self.omega,
                -1.0 if self.step is None else self.step,
                self.p_max)


class RunRecord(NamedTuple):
    cell: CellKey
    run: int
    seed: int
    r_succ: float


@dataclass(frozen=True)
class CellStats:
    cell: CellKey
    runs: int
    mean: float
    median: float
    std: float
    median_run: int


@dataclass
class ExperimentSummary:
    cells: list[CellStats]

    def __getitem__(self, key: CellKey) -> CellStats:
        for c in self.cells:
            if c.cell == key:
                return c
        raise KeyError(key)

    def __len__(self) -> int:
        return len(self.cells)


def summarize(cell: CellKey, values: Sequence[float], run_ids: Sequence[int] | None = None) -> CellStats:
    """Sample statistics of one cell (std with ddof=1; 0 for a single run).

    ``median_run`` is the run holding the middle value after sorting by
    (r_succ, run id); for even counts the lower middle.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError(f"cell {cell} has no runs")
    ids = np.arange(v.size) if run_ids is None else np.asarray(run_ids)
    order = np.lexsort((ids, v))
    median_run = int(ids[order[(v.size - 1) // 2]])
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return CellStats(cell, int(v.size), float(np.mean(v)), float(np.median(v)), std, median_run)


def aggregate(runs: Iterable[RunRecord]) -> ExperimentSummary:
    """Group runs by cell; cells come back sorted by key."""
    groups: dict[CellKey, list[RunRecord]] = {}
    for r in runs:
        groups.setdefault(r.cell, []).append(r)
    cells = []
    for key in sorted(groups, key=CellKey.sort_key):
        recs = sorted(groups[key], key=lambda r: r.run)
        cells.append(summarize(key, [r.r_succ for r in recs], [r.run for r in recs]))
    return ExperimentSummary(cells)


class ComparisonVerdict(enum.Enum):
    A_BETTER = "A_BETTER"
    B_BETTER = "B_BETTER"
    TIE = "TIE"


def compare(a: Sequence[float], b: Sequence[float], alpha: float = 0.05,
            ) -> tuple[ComparisonVerdict, float]:
    """Two-sided Wilcoxon rank-sum test on per-run scores (higher is better).

    Returns the verdict and the p-value.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size:
        raise ValueError(f"unequal run counts: {a.size} vs {b.size}")
    if a.size == 0 or np.all(np.concatenate([a, b]) == a[0]):
        return ComparisonVerdict.TIE, 1.0
    res = stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
    p = float(res.pvalue)
    if not p < alpha:
        return ComparisonVerdict.TIE, p
    u_expected = a.size * b.size / 2.0
    verdict = ComparisonVerdict.A_BETTER if res.statistic > u_expected else ComparisonVerdict.B_BETTER
    return verdict, p


@dataclass
class ParamLog:
    """Flat per-sample log of one parameter: iteration (1-based), value, success."""

    t: np.ndarray
    value: np.ndarray
    success: np.ndarray
    name: str = "C"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=float)
        self.success = np.asarray(self.success, dtype=bool)
        if not (self.t.shape == self.value.shape == self.success.shape):
            raise ValueError("t, value and success must have equal length")

    def __len__(self) -> int:
        return self.t.size

    @property
    def iterations(self) -> int:
        return int(self.t.max()) if self.t.size else 0

    @classmethod
    def from_arrays(cls, samples, flags, component: str) -> "ParamLog":
        """From ``(T, N, 2)`` samples and ``(T, N)`` flags, as in run and DE traces."""
        col = _component_column(component)
        samples = np.asarray(samples)
        T, N = samples.shape[:2]
        t = np.repeat(np.arange(1, T + 1), N)
        return cls(t, samples[:, :, col].ravel(), np.asarray(flags).ravel(), component.upper())

    @classmethod
    def from_run(cls, result, component: str = "C") -> "ParamLog":
        if result.samples is None:
            raise ValueError("run result carries no trace")
        return cls.from_arrays(result.samples, result.flags, component)

    @classmethod
    def from_de_trace(cls, trace, component: str = "F") -> "ParamLog":
        return cls.from_arrays(trace.samples, trace.success, component)

    @classmethod
    def read_csv(cls, path, component: str = "C") -> "ParamLog":
        """Read a simulation trace (``theta_f``/``theta_c`` columns) or a DE
        parameter log (``F``/``C`` columns)."""
        comp = component.upper()
        t, v, s = [], [], []
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames or []
            col = {"F": "theta_f", "C": "theta_c"}[comp] if "theta_f" in fields else comp
            if col not in fields:
                raise ValueError(f"{path}: no column for component {comp}")
            for row in reader:
                if row[col] == "":
                    continue
                t.append(int(row["t"]))
                v.append(float(row[col]))
                s.append(row["success"] in ("1", "True", "true"))
        return cls(np.array(t, dtype=np.int64), np.array(v), np.array(s, dtype=bool), comp)


def _component_column(component: str) -> int:
    try:
        return {"F": 0, "C": 1}[component.upper()]
    except KeyError:
        raise ValueError(f"component must be 'F' or 'C', got {component!r}") from None


def smoothed_success_trajectory(log: ParamLog, window: int | None = None,
                                iterations: int | None = None) -> np.ndarray:
    """Centred moving average of the successful values, one entry per iteration.

    Entry ``t - 1`` pools all successful values from iterations
    ``t - (window - 1) // 2`` to ``t + window // 2``. Iterations whose window
    holds no success are filled by linear interpolation (constant beyond the
    ends). ``window`` defaults to 5% of the iterations.
    """
    T = iterations or log.iterations
    if len(log) == 0 or T == 0:
        raise ValueError("empty parameter log")
    if window is None:
        window = max(1, round(0.05 * T))
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    ok = log.success & (log.t >= 1) & (log.t <= T)
    if not ok.any():
        raise ValueError("no successful samples to smooth")
    sums = np.bincount(log.t[ok] - 1, weights=log.value[ok], minlength=T)
    counts = np.bincount(log.t[ok] - 1, minlength=T).astype(float)
    before, after = (window - 1) // 2, window // 2
    cs = np.concatenate([[0.0], np.cumsum(sums)])
    cc = np.concatenate([[0.0], np.cumsum(counts)])
    idx = np.arange(T)
    lo = np.clip(idx - before, 0, T)
    hi = np.clip(idx + after + 1, 0, T)
    wsum = cs[hi] - cs[lo]
    wcnt = cc[hi] - cc[lo]
    curve = np.full(T, np.nan)
    has = wcnt > 0
    curve[has] = wsum[has] / wcnt[has]
    if not has.all():
        curve[~has] = np.interp(idx[~has], idx[has], curve[has])
    return curve


def distance_to_curve(log: ParamLog, curve) -> np.ndarray:
    """``|value - curve(t)|`` for every logged sample."""
    curve = np.asarray(curve, dtype=float)
    if log.t.size and (log.t.min() < 1 or log.t.max() > curve.size):
        raise ValueError("curve does not cover the log's iteration range")
    return np.abs(log.value - curve[log.t - 1])


@dataclass
class SuccessProfile:
    """Empirical success probability per distance bin; empty bins hold NaN."""

    bin_lo: np.ndarray
    bin_hi: np.ndarray
    successes: np.ndarray
    total: np.ndarray
    parameter: str = "C"

    @property
    def probability(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.total > 0, self.successes / np.maximum(self.total, 1), np.nan)

    @property
    def empty(self) -> np.ndarray:
        return self.total == 0

    def inversions(self, min_count: int = 20, tol: float = 0.0) -> list[int]:
        """Positions (in the list of bins with >= min_count samples) where the
        probability rises by more than ``tol`` from one eligible bin to the next."""
        p = self.probability[self.total >= min_count]
        return [j for j in range(p.size - 1) if p[j + 1] > p[j] + tol]

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "successes", "total", "probability"])
            for lo, hi, s, n, p in zip(self.bin_lo, self.bin_hi, self.successes,
                                       self.total, self.probability):
                w.writerow([fmt(float(lo)), fmt(float(hi)), int(s), int(n), fmt(float(p))])


def profile_from_distances(distances, success, n_bins: int = 20,
                           parameter: str = "C") -> SuccessProfile:
    """Bin samples into ``n_bins`` equal-width bins over the observed distance range."""
    d = np.asarray(distances, dtype=float)
    s = np.asarray(success, dtype=bool)
    if d.size == 0:
        raise ValueError("no samples to profile")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    lo, hi = float(d.min()), float(d.max())
    if hi <= lo:
        hi = lo + 1e-12
    edges = np.linspace(lo, hi, n_bins + 1)
    which = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, n_bins - 1)
    total = np.bincount(which, minlength=n_bins)
    succ = np.bincount(which[s], minlength=n_bins)
    return SuccessProfile(edges[:-1], edges[1:], succ, total, parameter)


def success_prob_vs_distance(log: ParamLog, curve, n_bins: int = 20) -> SuccessProfile:
    return profile_from_distances(distance_to_curve(log, curve), log.success, n_bins, log.name)


def pooled_profile(pairs: Iterable[tuple[ParamLog, np.ndarray]], n_bins: int = 20) -> SuccessProfile:
    """One profile over several runs, each log measured against its own curve."""
    ds, ss, name = [], [], "C"
    for log, curve in pairs:
        ds.append(distance_to_curve(log, curve))
        ss.append(log.success)
        name = log.name
    if not ds:
        raise ValueError("no runs to pool")
    return profile_from_distances(np.concatenate(ds), np.concatenate(ss), n_bins, name)


SUMMARY_HEADER = ["pam", "family", "omega", "step", "p_max", "runs", "mean", "median", "std", "median_run"]
RUNS_HEADER = ["pam", "family", "omega", "step", "p_max", "run", "seed", "r_succ"]


def write_summary_csv(summary: ExperimentSummary, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for c in summary.cells:
            k = c.cell
            w.writerow([k.pam, k.family, fmt(k.omega), fmt(k.step), fmt(k.p_max), c.runs,
                        fmt(c.mean), fmt(c.median), fmt(c.std), c.median_run])


def read_summary_csv(path) -> ExperimentSummary:
    cells = []
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            key = CellKey(row["pam"], row["family"], _opt_float(row["omega"]),
                          _opt_float(row["step"]), float(row["p_max"]))
            cells.append(CellStats(key, int(row["runs"]), float(row["mean"]),
                                   float(row["median"]), float(row["std"]),
                                   int(row["median_run"])))
    return ExperimentSummary(cells)


def write_runs_csv(records: Iterable[RunRecord], path) -> None:
    recs = sorted(records, key=lambda r: (r.cell.sort_key(), r.run))
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNS_HEADER)
        for r in recs:
            k = r.cell
            w.writerow([k.pam, k.family, fmt(k.omega), fmt(k.step), fmt(k.p_max),
                        r.run, r.seed, fmt(r.r_succ)])


def read_runs_csv(path) -> list[RunRecord]:
    out = []
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            key = CellKey(row["pam"], row["family"], _opt_float(row["omega"]),
                          _opt_float(row["step"]), float(row["p_max"]))
            out.append(RunRecord(key, int(row["run"]), int(row["seed"]), float(row["r_succ"])))
    return out
