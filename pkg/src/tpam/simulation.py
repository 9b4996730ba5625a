"""Target-tracking simulation: score how well a PAM follows a moving target.

Each iteration every sampled parameter is labelled successful with a
probability that decays linearly with its distance from the current target;
the PAM then adapts from those labels alone. The score ``r_succ`` is the
fraction of successful samples over the whole run.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .pam import (
    AdaptationMode,
    ConfigurationError,
    PamHyper,
    PamKind,
    _sample_kernel,
    _snapshot_kernel,
    _update_kernel,
    init_state,
)
from .targets import TargetSpec, trajectory

__all__ = [
    "LogLevel",
    "RunResult",
    "SimConfig",
    "acceptance_probability",
    "run_generators",
    "simulate_run",
    "success_rate",
    "write_meta_csv",
    "write_trace_csv",
]

_EUCLIDEAN, _MAXNORM = 0, 1
_DISTANCES = {"euclidean": _EUCLIDEAN, "max": _MAXNORM}


class LogLevel(enum.Enum):
    SUMMARY = "summary"
    FULL_TRACE = "full_trace"


@dataclass(frozen=True)
class SimConfig:
    """Settings of one simulation run.

    ``distance`` only matters in FC_PAIR mode: ``"euclidean"`` scales the
    2-norm of (dF, dC) by 1/sqrt(2) so it stays in [0, 1]; ``"max"`` uses the
    max-norm. ``strict_pseudocode`` runs ``t_max - 1`` iterations while still
    dividing by ``t_max * N``.
    """

    n: int = 50
    t_max: int = 1000
    alpha: float = 1.0
    p_max: float = 1.0
    mode: AdaptationMode = AdaptationMode.C_ONLY
    seed: int = 0
    log_level: LogLevel = LogLevel.SUMMARY
    distance: str = "euclidean"
    strict_pseudocode: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", AdaptationMode.parse(self.mode))
        object.__setattr__(self, "log_level", LogLevel(self.log_level))
        if self.n < 1:
            raise ConfigurationError(f"N must be >= 1, got {self.n}")
        if self.t_max < 1:
            raise ConfigurationError(f"t_max must be >= 1, got {self.t_max}")
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.p_max <= 1.0:
            raise ConfigurationError(f"p_max must lie in [0, 1], got {self.p_max}")
        if self.distance not in _DISTANCES:
            raise ConfigurationError(
                f"distance must be one of {sorted(_DISTANCES)}, got {self.distance!r}")

    @property
    def iterations(self) -> int:
        return self.t_max - 1 if self.strict_pseudocode else self.t_max


@dataclass
class RunResult:
    """Outcome of one run. Trace arrays are ``None`` unless FULL_TRACE was requested.

    ``targets`` is ``(T, 2)`` (F and C column), ``samples`` ``(T, N, 2)``,
    ``flags`` ``(T, N)``, ``meta`` ``(T, K, 2)`` holding the meta-parameters
    used to draw iteration t's samples (K = H for SHADE, else 1).
    """

    kind: PamKind
    mode: AdaptationMode
    r_succ: float
    successes: int
    iterations: int
    n: int
    t_max: int
    targets: np.ndarray | None = None
    samples: np.ndarray | None = None
    flags: np.ndarray | None = None
    meta: np.ndarray | None = field(default=None, repr=False)


def success_rate(successes: int, t_max: int, n: int) -> float:
    """Fraction of successes among ``t_max * n`` samples."""
    total = t_max * n
    if not 0 <= successes <= total:
        raise ValueError(f"successes must lie in [0, {total}], got {successes}")
    return successes / total


def acceptance_probability(sample, target, alpha: float, p_max: float,
                           distance: str = "euclidean") -> float:
    """``max(p_max - alpha * d, 0)`` for a scalar or an (F, C) pair."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    s = np.atleast_1d(np.asarray(sample, dtype=float))
    g = np.atleast_1d(np.asarray(target, dtype=float))
    if s.shape != g.shape or s.size not in (1, 2):
        raise ValueError("sample and target must both be scalars or (F, C) pairs")
    if s.size == 1:
        d = abs(s[0] - g[0])
    elif distance == "max":
        d = float(np.max(np.abs(s - g)))
    else:
        d = math.hypot(*(s - g)) / math.sqrt(2.0)
    return max(-alpha * d + p_max, 0.0)


def run_generators(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (PAM, target) generators for one run seed.

    The target stream depends on the seed only, so every PAM run with the
    same seed sees the same random-walk instance.
    """
    pam_ss, target_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(pam_ss), np.random.default_rng(target_ss)


def _target_matrix(target_spec, t_max: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(target_spec, TargetSpec):
        g = trajectory(target_spec, t_max, rng)
        return np.column_stack([g, g])
    f_spec, c_spec = target_spec
    return np.column_stack([trajectory(f_spec, t_max, rng),
                            trajectory(c_spec, t_max, rng)])


def simulate_run(pam_kind, hyper: PamHyper | None, target_spec,
                 config: SimConfig) -> RunResult:
    """Run one tracking simulation.

    ``target_spec`` is a :class:`TargetSpec` shared by both components, or an
    ``(f_spec, c_spec)`` pair for independent targets in FC_PAIR mode.
    Deterministic given ``config.seed``.
    """
    kind = PamKind.parse(pam_kind)
    state = init_state(kind, hyper, config.n, config.mode)
    pam_rng, target_rng = run_generators(config.seed)
    targets = _target_matrix(target_spec, config.t_max, target_rng)

    trace = config.log_level is LogLevel.FULL_TRACE
    n_iter = config.iterations
    width = state.snapshot_width
    if trace:
        samples = np.empty((n_iter, config.n, 2))
        flags = np.zeros((n_iter, config.n), dtype=np.bool_)
        meta = np.empty((n_iter, width, 2))
    else:
        samples = np.empty((0, config.n, 2))
        flags = np.zeros((0, config.n), dtype=np.bool_)
        meta = np.empty((0, width, 2))

    h = state.hyper
    total = _run_kernel(
        int(kind), state.active, state.values, state.mu, state.memory, state.k,
        state.f_pool, state.c_pool, np.array([h.tau_f, h.tau_c]),
        float(h.cauchy_scale), float(h.normal_sd), float(h.learning_rate),
        np.array([h.mde_cf_max, h.mde_cc_max]), targets, n_iter,
        float(config.alpha), float(config.p_max), _DISTANCES[config.distance],
        pam_rng, trace, samples, flags, meta)

    result = RunResult(kind, config.mode, success_rate(int(total), config.t_max, config.n),
                       int(total), n_iter, config.n, config.t_max)
    if trace:
        result.targets = targets[:n_iter]
        result.samples = samples
        result.flags = flags
        result.meta = meta
    return result


@njit(cache=True)
def _accept(sf, sc, tf, tc, which, alpha, p_max, norm):
    # which: 0 = F only, 1 = C only, 2 = (F, C) pair
    if which == 2:
        df = abs(sf - tf)
        dc = abs(sc - tc)
        if norm == _MAXNORM:
            d = max(df, dc)
        else:
            d = math.sqrt(df * df + dc * dc) / math.sqrt(2.0)
    elif which == 0:
        d = abs(sf - tf)
    else:
        d = abs(sc - tc)
    return max(-alpha * d + p_max, 0.0)


@njit(cache=True)
def _run_kernel(kind, active, values, mu, memory, k, f_pool, c_pool, tau,
                scale, sd, c_rate, c_max, targets, n_iter, alpha, p_max, norm,
                rng, trace, samples, flags, meta):
    n = values.shape[0]
    which = 2 if (active[0] and active[1]) else (0 if active[0] else 1)
    trial = np.empty((n, 2))
    success = np.zeros(n, dtype=np.bool_)
    total = 0
    for t in range(n_iter):
        if trace:
            _snapshot_kernel(kind, values, mu, memory, meta[t])
        _sample_kernel(kind, active, values, mu, memory, tau, scale, sd, rng, trial)
        for i in range(n):
            p = _accept(trial[i, 0], trial[i, 1], targets[t, 0], targets[t, 1],
                        which, alpha, p_max, norm)
            # U[0, 1) < p has probability exactly p, and never fires at p = 0
            ok = rng.random() < p
            success[i] = ok
            if ok:
                total += 1
        if trace:
            samples[t] = trial
            flags[t] = success
        _update_kernel(kind, active, values, mu, memory, k, f_pool, c_pool,
                       c_rate, c_max, trial, success, rng)
    return total


def _fmt(x: float) -> str:
    return "" if x != x else f"{x:.9g}"


def write_trace_csv(result: RunResult, path) -> None:
    """Per-sample trace: ``t, target, i, theta_f, theta_c, success``.

    With independent FC targets the single ``target`` column is replaced by
    ``target_f, target_c``.
    """
    if result.samples is None:
        raise ValueError("result carries no trace; run with LogLevel.FULL_TRACE")
    tg = result.targets
    split = result.mode is AdaptationMode.FC_PAIR and not np.array_equal(tg[:, 0], tg[:, 1])
    col = 0 if result.mode is AdaptationMode.F_ONLY else 1
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + (["target_f", "target_c"] if split else ["target"])
                   + ["i", "theta_f", "theta_c", "success"])
        for t in range(result.iterations):
            head = [t + 1] + ([_fmt(tg[t, 0]), _fmt(tg[t, 1])] if split else [_fmt(tg[t, col])])
            for i in range(result.n):
                f, c = result.samples[t, i]
                w.writerow(head + [i + 1, _fmt(f), _fmt(c), int(result.flags[t, i])])


def write_meta_csv(result: RunResult, path) -> None:
    """Meta-parameter snapshots per iteration.

    Columns are ``t`` then, per active component, ``mu_f``/``mu_c`` or
    ``M_f_1..M_f_H``/``M_c_1..M_c_H`` for SHADE. For jDE and EPSDE ``mu_*``
    is the mean committed per-individual value.
    """
    if result.meta is None:
        raise ValueError("result carries no trace; run with LogLevel.FULL_TRACE")
    comps = [(c, name) for c, name in ((0, "f"), (1, "c")) if result.mode.active[c]]
    width = result.meta.shape[1]
    header = ["t"]
    for _, name in comps:
        if result.kind is PamKind.SHADE:
            header += [f"M_{name}_{j + 1}" for j in range(width)]
        else:
            header.append(f"mu_{name}")
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(result.iterations):
            row = [t + 1]
            for c, _ in comps:
                row += [_fmt(v) for v in result.meta[t, :, c]]
            w.writerow(row)
