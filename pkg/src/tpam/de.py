"""A small adaptive DE whose F and C come from a pluggable PAM.

It exists to check the tracking model against real searches: it logs every
(F, C) sample with its success flag so the analysis module can measure how
success probability falls off with distance from the successful-parameter
trend.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .benchmarks import BENCHMARKS
from .pam import AdaptationMode, ConfigurationError, PamHyper, PamKind, init_state, sample, update

__all__ = [
    "Archive",
    "Crossover",
    "DeConfig",
    "DeTrace",
    "Individual",
    "Mutation",
    "crossover_binomial",
    "crossover_shuffled_exponential",
    "draw_indices",
    "mutant_vectors",
    "mutate",
    "repair_bounds",
    "run_adaptive_de",
    "select",
]


class Mutation(str, enum.Enum):
    RAND_1 = "rand/1"
    RAND_2 = "rand/2"
    BEST_1 = "best/1"
    BEST_2 = "best/2"
    CUR_TO_RAND_1 = "current-to-rand/1"
    CUR_TO_BEST_1 = "current-to-best/1"
    CUR_TO_PBEST_1 = "current-to-pbest/1"
    RAND_TO_PBEST_1 = "rand-to-pbest/1"

    @classmethod
    def parse(cls, value) -> "Mutation":
        if isinstance(value, Mutation):
            return value
        key = str(value).strip()
        for m in cls:
            if key in (m.value, m.name) or key.upper() == m.name:
                return m
        norm = key.lower().replace("_", "-").replace("cur-", "current-")
        norm = norm[::-1].replace("-", "/", 1)[::-1]
        for m in cls:
            if m.value == norm:
                return m
        raise ConfigurationError(f"unknown mutation strategy {value!r}")

    @property
    def uses_pbest(self) -> bool:
        return self in (Mutation.CUR_TO_PBEST_1, Mutation.RAND_TO_PBEST_1)

    @property
    def uses_best(self) -> bool:
        return self in (Mutation.BEST_1, Mutation.BEST_2, Mutation.CUR_TO_BEST_1)


class Crossover(str, enum.Enum):
    BINOMIAL = "bin"
    SHUFFLED_EXP = "sec"

    @classmethod
    def parse(cls, value) -> "Crossover":
        if isinstance(value, Crossover):
            return value
        key = str(value).lower()
        aliases = {"binomial": "bin", "shuffled_exp": "sec", "shuffled-exponential": "sec",
                   "shuffled_exponential": "sec", "exp": "sec"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigurationError(f"unknown crossover {value!r}") from None


# (population indices needed besides i, whether the last one is drawn from P ∪ A)
_DEMANDS = {
    Mutation.RAND_1: (3, False),
    Mutation.RAND_2: (5, False),
    Mutation.BEST_1: (2, False),
    Mutation.BEST_2: (4, False),
    Mutation.CUR_TO_RAND_1: (3, False),
    Mutation.CUR_TO_BEST_1: (2, False),
    Mutation.CUR_TO_PBEST_1: (2, True),
    Mutation.RAND_TO_PBEST_1: (3, True),
}


@dataclass
class Individual:
    x: np.ndarray
    fitness: float


class Archive:
    """Bounded store of replaced parents; random eviction once full."""

    def __init__(self, capacity: int, dim: int):
        self.capacity = int(capacity)
        self._data = np.empty((self.capacity, dim))
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def members(self) -> np.ndarray:
        return self._data[: self._size]

    def add(self, x, rng: np.random.Generator) -> None:
        if self.capacity == 0:
            return
        if self._size < self.capacity:
            self._data[self._size] = x
            self._size += 1
        else:
            self._data[rng.integers(0, self.capacity)] = x


def draw_indices(rng: np.random.Generator, rows, n: int, count: int,
                 last_pool: int | None = None) -> np.ndarray:
    """Per row i, ``count`` mutually distinct indices from ``range(n)``, all != i.

    When ``last_pool`` is given the final column is drawn from
    ``range(last_pool)`` instead; indices >= n address the archive and never
    clash with population indices.
    """
    rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
    if count + 1 > n:
        raise ConfigurationError(
            f"population of {n} cannot supply {count} distinct indices besides i")
    idx = np.empty((rows.size, count), dtype=np.intp)
    for j in range(count):
        size = last_pool if (last_pool is not None and j == count - 1) else n
        col = rng.integers(0, size, size=rows.size)
        while True:
            clash = col == rows
            for prev in range(j):
                clash |= col == idx[:, prev]
            n_bad = int(clash.sum())
            if n_bad == 0:
                break
            col[clash] = rng.integers(0, size, size=n_bad)
        idx[:, j] = col
    return idx


def mutant_vectors(strategy, population, rows, F, idx, best=None, pbest=None,
                   archive=None) -> np.ndarray:
    """Mutants for ``rows`` given already-drawn indices.

    ``idx`` columns follow :func:`draw_indices`; for the pbest strategies the
    last column indexes population-then-archive. ``best`` is one index,
    ``pbest`` one index per row.
    """
    strategy = Mutation.parse(strategy)
    X = np.asarray(population, dtype=float)
    rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
    idx = np.atleast_2d(np.asarray(idx, dtype=np.intp))
    F = np.broadcast_to(np.asarray(F, dtype=float), rows.shape)[:, None]
    r = [idx[:, j] for j in range(idx.shape[1])]
    xi = X[rows]
    if strategy is Mutation.RAND_1:
        return X[r[0]] + F * (X[r[1]] - X[r[2]])
    if strategy is Mutation.RAND_2:
        return X[r[0]] + F * (X[r[1]] - X[r[2]]) + F * (X[r[3]] - X[r[4]])
    if strategy is Mutation.BEST_1:
        return X[best] + F * (X[r[0]] - X[r[1]])
    if strategy is Mutation.BEST_2:
        return X[best] + F * (X[r[0]] - X[r[1]]) + F * (X[r[2]] - X[r[3]])
    if strategy is Mutation.CUR_TO_RAND_1:
        return xi + F * (X[r[0]] - xi) + F * (X[r[1]] - X[r[2]])
    if strategy is Mutation.CUR_TO_BEST_1:
        return xi + F * (X[best] - xi) + F * (X[r[0]] - X[r[1]])
    pool = X if archive is None or len(archive) == 0 else np.vstack([X, archive])
    xp = X[np.broadcast_to(np.asarray(pbest, dtype=np.intp), rows.shape)]
    if strategy is Mutation.CUR_TO_PBEST_1:
        return xi + F * (xp - xi) + F * (X[r[0]] - pool[r[1]])
    return X[r[0]] + F * (xp - X[r[0]]) + F * (X[r[1]] - pool[r[2]])


def mutate(strategy, population, i: int, F: float, pbest_set=None, archive=None,
           rng: np.random.Generator | None = None) -> np.ndarray:
    """Mutant vector for individual ``i``.

    ``pbest_set`` lists candidate indices sorted best first; its head is the
    population best used by the best/* strategies, and the pbest strategies
    pick uniformly from it.
    """
    strategy = Mutation.parse(strategy)
    X = np.asarray(population, dtype=float)
    n = X.shape[0]
    arch = np.empty((0, X.shape[1])) if archive is None else np.asarray(archive, dtype=float)
    count, from_pool = _DEMANDS[strategy]
    idx = draw_indices(rng, [i], n, count, n + len(arch) if from_pool else None)
    best = pbest = None
    if strategy.uses_best or strategy.uses_pbest:
        if pbest_set is None or len(pbest_set) == 0:
            raise ConfigurationError(f"{strategy.value} needs a nonempty pbest_set")
        best = int(pbest_set[0])
        if strategy.uses_pbest:
            pbest = int(pbest_set[rng.integers(0, len(pbest_set))])
    return mutant_vectors(strategy, X, [i], F, idx, best, pbest, arch)[0]


def crossover_binomial(parent, mutant, C, rng: np.random.Generator) -> np.ndarray:
    """Take each coordinate from the mutant with probability C, plus one forced index.

    Works on single vectors or row-wise on matrices (one C per row). The
    forced index is drawn first, then one uniform per coordinate.
    """
    parent = np.asarray(parent, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if parent.shape != mutant.shape:
        raise ValueError("parent and mutant must have the same shape")
    lead, d = parent.shape[:-1], parent.shape[-1]
    jr = np.asarray(rng.integers(0, d, size=lead))
    mask = rng.random(parent.shape) < np.asarray(C, dtype=float)[..., None]
    np.put_along_axis(mask, jr[..., None], True, axis=-1)
    return np.where(mask, mutant, parent)


def crossover_shuffled_exponential(parent, mutant, C, rng: np.random.Generator) -> np.ndarray:
    """Exponential crossover over a random permutation of the coordinates.

    Draw order: permutation, start position, then one uniform per extension.
    The first coordinate is always copied; copying continues while U < C,
    for at most D coordinates.
    """
    parent = np.asarray(parent, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if parent.shape != mutant.shape or parent.ndim != 1:
        raise ValueError("parent and mutant must be vectors of equal length")
    d = parent.size
    order = rng.permutation(d)
    start = int(rng.integers(0, d))
    u = parent.copy()
    copied = 0
    while True:
        j = order[(start + copied) % d]
        u[j] = mutant[j]
        copied += 1
        if copied >= d or not rng.random() < C:
            break
    return u


def repair_bounds(trial, parent, lo, hi) -> np.ndarray:
    """Move each out-of-range coordinate halfway between the violated bound and the parent."""
    trial = np.array(trial, dtype=float)
    parent = np.asarray(parent, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), trial.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), trial.shape)
    low = trial < lo
    high = trial > hi
    trial[low] = (lo[low] + parent[low]) / 2.0
    trial[high] = (hi[high] + parent[high]) / 2.0
    return trial


def select(parent: Individual, trial: Individual, archive: Archive | None = None,
           rng: np.random.Generator | None = None) -> tuple[Individual, bool]:
    """One-to-one survivor selection; ties go to the trial.

    When an archive is given, a replaced parent is stored in it.
    """
    success = bool(trial.fitness <= parent.fitness)
    if not success:
        return parent, False
    if archive is not None:
        archive.add(parent.x, rng)
    return trial, True


@dataclass
class DeConfig:
    """One adaptive-DE run.

    ``n`` defaults to ``max(20, 5 * dim)`` and ``max_evals`` to
    ``10_000 * dim``. ``function`` is a benchmark name or a callable on one
    vector. With ``target_error`` set, the run also stops after the first
    generation whose best fitness is at or below it (all benchmark optima
    are 0).
    """

    function: str | Callable = "sphere"
    dim: int = 10
    n: int | None = None
    max_evals: int | None = None
    mutation: Mutation = Mutation.CUR_TO_PBEST_1
    crossover: Crossover = Crossover.BINOMIAL
    p: float = 0.05
    archive_size: int | None = None
    bounds: tuple[float, float] = (-5.0, 5.0)
    pam: PamKind = PamKind.JADE
    hyper: PamHyper = field(default_factory=PamHyper)
    seed: int = 0
    target_error: float | None = None

    def __post_init__(self):
        self.mutation = Mutation.parse(self.mutation)
        self.crossover = Crossover.parse(self.crossover)
        self.pam = PamKind.parse(self.pam)
        if self.dim < 1:
            raise ConfigurationError(f"dim must be >= 1, got {self.dim}")
        if self.n is None:
            self.n = max(20, 5 * self.dim)
        if self.max_evals is None:
            self.max_evals = 10_000 * self.dim
        if self.archive_size is None:
            self.archive_size = self.n
        if self.n < 4:
            raise ConfigurationError(f"N must be >= 4, got {self.n}")
        count, _ = _DEMANDS[self.mutation]
        if count + 1 > self.n:
            raise ConfigurationError(
                f"{self.mutation.value} needs N >= {count + 1}, got {self.n}")
        if self.mutation.uses_pbest and not 0 < self.p <= 1:
            raise ConfigurationError(f"p must lie in (0, 1], got {self.p}")
        lo, hi = self.bounds
        if not lo < hi:
            raise ConfigurationError(f"bounds must satisfy lo < hi, got {self.bounds}")
        if isinstance(self.function, str) and self.function not in BENCHMARKS:
            raise ConfigurationError(f"unknown benchmark {self.function!r}")
        if self.max_evals < self.n:
            raise ConfigurationError("max_evals must cover at least the initial population")
        self.hyper.validate(self.pam)

    @property
    def pbest_size(self) -> int:
        return max(1, math.ceil(self.p * self.n))

    def objective(self) -> Callable[[np.ndarray], np.ndarray]:
        if isinstance(self.function, str):
            return BENCHMARKS[self.function]
        fn = self.function
        return lambda X: np.array([float(fn(x)) for x in X])


@dataclass
class DeTrace:
    """Per-generation log of one run.

    ``samples`` is ``(T, N, 2)`` holding (F, C); ``success`` is ``(T, N)``.
    ``best_f[t]`` is the best fitness after generation ``t + 1``.
    """

    best_f: np.ndarray
    samples: np.ndarray
    success: np.ndarray
    evals: int
    best_x: np.ndarray
    initial_best_f: float

    @property
    def generations(self) -> int:
        return self.best_f.shape[0]

    @property
    def final_error(self) -> float:
        return float(self.best_f[-1]) if self.generations else self.initial_best_f

    def write_best_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "best_f"])
            for t, v in enumerate(self.best_f, start=1):
                w.writerow([t, f"{v:.9g}"])

    def write_params_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "F", "C", "success"])
            for t in range(self.generations):
                for (f, c), s in zip(self.samples[t], self.success[t]):
                    w.writerow([t + 1, f"{f:.9g}", f"{c:.9g}", int(s)])


def run_adaptive_de(config: DeConfig) -> DeTrace:
    """Generational DE with PAM-supplied F and C.

    Runs whole generations while the budget allows, or until
    ``config.target_error`` is reached. Best and pbest
    candidates are taken from the population at the start of each
    generation.
    """
    rng = np.random.default_rng(config.seed)
    objective = config.objective()
    n, d = config.n, config.dim
    lo, hi = config.bounds
    X = lo + (hi - lo) * rng.random((n, d))
    fit = np.asarray(objective(X), dtype=float)
    _check_finite(fit)
    evals = n
    state = init_state(config.pam, config.hyper, n, AdaptationMode.FC_PAIR)
    archive = Archive(config.archive_size, d)
    strategy = config.mutation
    count, from_pool = _DEMANDS[strategy]
    rows = np.arange(n)

    n_gen = (config.max_evals - evals) // n
    best_hist = np.empty(n_gen)
    samples_hist = np.empty((n_gen, n, 2))
    success_hist = np.zeros((n_gen, n), dtype=bool)
    initial_best = float(fit.min())

    for g in range(n_gen):
        order = np.argsort(fit, kind="stable")
        best = int(order[0])
        theta = sample(state, rng)
        F, C = theta[:, 0], theta[:, 1]
        idx = draw_indices(rng, rows, n, count, n + len(archive) if from_pool else None)
        pbest = None
        if strategy.uses_pbest:
            top = order[: config.pbest_size]
            pbest = top[rng.integers(0, top.size, size=n)]
        V = mutant_vectors(strategy, X, rows, F, idx, best, pbest, archive.members)
        if config.crossover is Crossover.BINOMIAL:
            U = crossover_binomial(X, V, C, rng)
        else:
            U = np.array([crossover_shuffled_exponential(X[i], V[i], C[i], rng) for i in rows])
        U = repair_bounds(U, X, lo, hi)
        fu = np.asarray(objective(U), dtype=float)
        _check_finite(fu)
        evals += n

        success = fu <= fit
        if strategy.uses_pbest:
            for i in np.flatnonzero(success):
                archive.add(X[i], rng)
        X[success] = U[success]
        fit[success] = fu[success]
        update(state, theta, success, rng)

        best_hist[g] = fit.min()
        samples_hist[g] = theta
        success_hist[g] = success
        if config.target_error is not None and best_hist[g] <= config.target_error:
            n_gen = g + 1
            break

    b = int(np.argmin(fit))
    return DeTrace(best_hist[:n_gen], samples_hist[:n_gen], success_hist[:n_gen],
                   evals, X[b].copy(), initial_best)


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("objective returned a non-finite value")
