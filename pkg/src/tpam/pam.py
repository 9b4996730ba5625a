"""Parameter adaptation methods (PAMs) for DE, driven only by success flags.

Each PAM is reduced to three steps: sample control parameters for ``N``
slots, receive one success/failure flag per slot, update internal state.
Nothing here knows about objective values, which is what lets the same code
serve both the tracking simulation and the real DE engine.

Samples are ``(N, 2)`` float arrays with column 0 holding F and column 1
holding C. Columns belonging to an inactive component are NaN.

The heavy lifting happens in numba kernels that take a
``numpy.random.Generator`` directly, so one seeded generator per run drives
everything in a fixed order. The pure-Python bodies remain reachable through
``.py_func`` for tests that script the random draws.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "AdaptationMode",
    "ConfigurationError",
    "PamHyper",
    "PamKind",
    "PamState",
    "init_state",
    "lehmer_mean",
    "power_mean",
    "sample",
    "sample_cauchy_truncated",
    "sample_normal_clamped",
    "update",
]

# kernel-side kind codes; must match PamKind values
_JDE, _EPSDE, _JADE, _MDE, _SHADE, _FIXED = 0, 1, 2, 3, 4, 5

MAX_CAUCHY_REDRAWS = 100
_POWER_EXPONENT = 1.5
_TINY = 1e-12


class ConfigurationError(ValueError):
    """Raised when a PAM, target or run configuration is invalid."""


class PamKind(enum.IntEnum):
    JDE = _JDE
    EPSDE = _EPSDE
    JADE = _JADE
    MDE = _MDE
    SHADE = _SHADE
    # constant F/C; degenerates the DE engine to classic DE
    FIXED = _FIXED

    @classmethod
    def parse(cls, name: "str | PamKind") -> "PamKind":
        if isinstance(name, PamKind):
            return name
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ConfigurationError(f"unknown PAM {name!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


STANDARD_PAMS = (PamKind.JDE, PamKind.EPSDE, PamKind.JADE, PamKind.MDE, PamKind.SHADE)


class AdaptationMode(enum.Enum):
    """Which control parameter(s) a run adapts."""

    F_ONLY = "F"
    C_ONLY = "C"
    FC_PAIR = "FC"

    @classmethod
    def parse(cls, value: "str | AdaptationMode") -> "AdaptationMode":
        if isinstance(value, AdaptationMode):
            return value
        v = str(value).upper().replace("_ONLY", "").replace("_PAIR", "")
        for mode in cls:
            if mode.value == v:
                return mode
        raise ConfigurationError(f"unknown adaptation mode {value!r}")

    @property
    def active(self) -> np.ndarray:
        return np.array([self is not AdaptationMode.C_ONLY,
                         self is not AdaptationMode.F_ONLY])


def _default_pool() -> tuple[float, ...]:
    return tuple(round(0.1 * j, 1) for j in range(11))


@dataclass(frozen=True)
class PamHyper:
    """Hyperparameters of all PAMs. Each kind reads only the fields it needs.

    Defaults are the settings of the original methods, with jDE's F range
    and the EPSDE pools widened to [0, 1].
    """

    tau_f: float = 0.1
    tau_c: float = 0.1
    learning_rate: float = 0.1
    memory_size: int = 10
    f_pool: tuple[float, ...] = field(default_factory=_default_pool)
    c_pool: tuple[float, ...] = field(default_factory=_default_pool)
    cauchy_scale: float = 0.1
    normal_sd: float = 0.1
    mde_cf_max: float = 0.2
    mde_cc_max: float = 0.1
    fixed_f: float = 0.5
    fixed_c: float = 0.9
    init_value: float = 0.5

    def validate(self, kind: PamKind) -> None:
        def rate(name, value):
            if not 0.0 < value <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")

        def unit(name, value):
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")

        unit("init_value", self.init_value)
        if kind is PamKind.JDE:
            rate("tau_f", self.tau_f)
            rate("tau_c", self.tau_c)
        elif kind is PamKind.EPSDE:
            for name, pool in (("f_pool", self.f_pool), ("c_pool", self.c_pool)):
                if len(pool) == 0:
                    raise ConfigurationError(f"{name} must be nonempty")
                for v in pool:
                    unit(name, v)
                if not any(np.isclose(v, self.init_value) for v in pool):
                    raise ConfigurationError(
                        f"{name} must contain the initial value {self.init_value}")
        elif kind in (PamKind.JADE, PamKind.MDE, PamKind.SHADE):
            rate("learning_rate", self.learning_rate)
            rate("mde_cf_max", self.mde_cf_max)
            rate("mde_cc_max", self.mde_cc_max)
            if self.cauchy_scale <= 0 or self.normal_sd <= 0:
                raise ConfigurationError("cauchy_scale and normal_sd must be > 0")
            if kind is PamKind.SHADE and int(self.memory_size) < 1:
                raise ConfigurationError(
                    f"memory_size must be >= 1, got {self.memory_size}")
        elif kind is PamKind.FIXED:
            unit("fixed_f", self.fixed_f)
            unit("fixed_c", self.fixed_c)


@dataclass
class PamState:
    """Mutable adaptation state of one PAM instance.

    Attributes
    ----------
    values : ndarray, shape (N, 2)
        Committed per-individual parameters (jDE, EPSDE).
    mu : ndarray, shape (2,)
        Location meta-parameters (JADE, MDE) or the constants (FIXED).
    memory : ndarray, shape (H, 2)
        Historical memory (SHADE). Other kinds carry a 1-row placeholder.
    k : ndarray, shape (1,)
        Zero-based SHADE write position, kept in an array so kernels can
        advance it in place. ``mem_index`` gives the 1-based view.
    """

    kind: PamKind
    mode: AdaptationMode
    hyper: PamHyper
    values: np.ndarray
    mu: np.ndarray
    memory: np.ndarray
    k: np.ndarray
    f_pool: np.ndarray
    c_pool: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def active(self) -> np.ndarray:
        return self.mode.active

    @property
    def mu_f(self) -> float:
        return float(self.mu[0])

    @property
    def mu_c(self) -> float:
        return float(self.mu[1])

    @property
    def memory_f(self) -> np.ndarray:
        return self.memory[:, 0]

    @property
    def memory_c(self) -> np.ndarray:
        return self.memory[:, 1]

    @property
    def mem_index(self) -> int:
        return int(self.k[0]) + 1

    @property
    def per_individual(self) -> np.ndarray:
        return self.values

    @property
    def snapshot_width(self) -> int:
        return self.memory.shape[0] if self.kind is PamKind.SHADE else 1

    def snapshot(self) -> np.ndarray:
        """Meta-parameter view: memory for SHADE, a single row otherwise."""
        out = np.empty((self.snapshot_width, 2))
        _snapshot_kernel(int(self.kind), self.values, self.mu, self.memory, out)
        return out

    def copy(self) -> "PamState":
        return PamState(self.kind, self.mode, self.hyper, self.values.copy(),
                        self.mu.copy(), self.memory.copy(), self.k.copy(),
                        self.f_pool, self.c_pool)

    # argument bundles for the kernels
    def _sample_args(self):
        h = self.hyper
        return (int(self.kind), self.active, self.values, self.mu, self.memory,
                np.array([h.tau_f, h.tau_c]), float(h.cauchy_scale),
                float(h.normal_sd))

    def _update_args(self):
        h = self.hyper
        return (int(self.kind), self.active, self.values, self.mu, self.memory,
                self.k, self.f_pool, self.c_pool, float(h.learning_rate),
                np.array([h.mde_cf_max, h.mde_cc_max]))


def init_state(kind, hyper: PamHyper | None = None, n: int = 50,
               mode=AdaptationMode.C_ONLY) -> PamState:
    """Fresh state: every per-individual value, mu and memory slot at 0.5."""
    kind = PamKind.parse(kind)
    mode = AdaptationMode.parse(mode)
    hyper = hyper or PamHyper()
    if n < 1:
        raise ConfigurationError(f"N must be >= 1, got {n}")
    hyper.validate(kind)
    v0 = float(hyper.init_value)
    values = np.full((n, 2), v0)
    if kind is PamKind.FIXED:
        mu = np.array([hyper.fixed_f, hyper.fixed_c], dtype=float)
    else:
        mu = np.full(2, v0)
    h = int(hyper.memory_size) if kind is PamKind.SHADE else 1
    memory = np.full((h, 2), v0)
    return PamState(kind, mode, hyper, values, mu, memory,
                    np.zeros(1, dtype=np.int64),
                    np.asarray(hyper.f_pool, dtype=float),
                    np.asarray(hyper.c_pool, dtype=float))


def sample(state: PamState, rng: np.random.Generator) -> np.ndarray:
    """Draw one (F, C) sample per slot; returns an ``(N, 2)`` array."""
    out = np.empty((state.n, 2))
    _sample_kernel(*state._sample_args(), rng, out)
    return out


def update(state: PamState, samples, success_flags, rng: np.random.Generator) -> PamState:
    """Feed back per-slot success flags for ``samples``; mutates and returns ``state``."""
    samples = np.asarray(samples, dtype=float)
    flags = np.asarray(success_flags, dtype=np.bool_)
    if samples.shape != (state.n, 2) or flags.shape != (state.n,):
        raise ValueError(
            f"expected {state.n} samples and flags, got samples {samples.shape} "
            f"and flags {flags.shape}")
    _update_kernel(*state._update_args(), samples, flags, rng)
    return state


def lehmer_mean(values) -> float:
    """Contraharmonic (Lehmer, p=2) mean: sum(s**2) / sum(s)."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("lehmer_mean of an empty set")
    if np.any(arr < 0):
        raise ValueError("lehmer_mean needs nonnegative values")
    return float(_lehmer(arr))


def power_mean(values) -> float:
    """Power mean with exponent 1.5."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("power_mean of an empty set")
    if np.any(arr < 0):
        raise ValueError("power_mean needs nonnegative values")
    return float(_power(arr))


@njit(cache=True)
def _lehmer(values):
    num = 0.0
    den = 0.0
    for v in values:
        num += v * v
        den += v
    if den == 0.0:
        # all-zero set; the limit of the ratio
        return 0.0
    return num / den


@njit(cache=True)
def _power(values):
    acc = 0.0
    for v in values:
        acc += v ** _POWER_EXPONENT
    return (acc / values.shape[0]) ** (1.0 / _POWER_EXPONENT)


@njit(cache=True)
def _arith(values):
    acc = 0.0
    for v in values:
        acc += v
    return acc / values.shape[0]


@njit(cache=True)
def _index(size, rng):
    # uniform over range(size); floor of U[0, 1) * size
    return int(rng.random() * size)


@njit(cache=True)
def sample_cauchy_truncated(location, scale, rng):
    """Cauchy draw mapped into (0, 1]: values above 1 become 1, values <= 0 are redrawn.

    After ``MAX_CAUCHY_REDRAWS`` nonpositive draws the location, clamped into
    (0, 1], is returned so the loop always terminates.
    """
    for _ in range(MAX_CAUCHY_REDRAWS):
        v = location + scale * rng.standard_cauchy()
        if v > 0.0:
            return min(v, 1.0)
    return min(max(location, _TINY), 1.0)


@njit(cache=True)
def sample_normal_clamped(mean, sd, rng):
    """Normal draw clamped to the nearest of 0 and 1 when out of range."""
    v = rng.normal(mean, sd)
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


@njit(cache=True)
def _sample_kernel(kind, active, values, mu, memory, tau, scale, sd, rng, out):
    n = out.shape[0]
    h = memory.shape[0]
    for i in range(n):
        if kind == _JDE:
            for c in range(2):
                if active[c]:
                    if rng.random() < tau[c]:
                        out[i, c] = rng.random()
                    else:
                        out[i, c] = values[i, c]
        elif kind == _EPSDE:
            for c in range(2):
                out[i, c] = values[i, c]
        elif kind == _FIXED:
            for c in range(2):
                out[i, c] = mu[c]
        else:
            if kind == _SHADE:
                r = _index(h, rng)
                loc_f = memory[r, 0]
                loc_c = memory[r, 1]
            else:
                loc_f = mu[0]
                loc_c = mu[1]
            if active[0]:
                out[i, 0] = sample_cauchy_truncated(loc_f, scale, rng)
            if active[1]:
                out[i, 1] = sample_normal_clamped(loc_c, sd, rng)
        for c in range(2):
            if not active[c]:
                out[i, c] = np.nan


@njit(cache=True)
def _update_kernel(kind, active, values, mu, memory, k, f_pool, c_pool,
                   c_rate, c_max, trial, success, rng):
    n = trial.shape[0]
    if kind == _JDE or kind == _EPSDE:
        for i in range(n):
            if success[i]:
                for c in range(2):
                    if active[c]:
                        values[i, c] = trial[i, c]
            elif kind == _EPSDE:
                if active[0]:
                    values[i, 0] = f_pool[_index(f_pool.shape[0], rng)]
                if active[1]:
                    values[i, 1] = c_pool[_index(c_pool.shape[0], rng)]
        return
    if kind == _FIXED:
        return

    rate_f = c_rate
    rate_c = c_rate
    if kind == _MDE:
        # (0, max]: 1 - U[0, 1) lies in (0, 1]
        rate_f = c_max[0] * (1.0 - rng.random())
        rate_c = c_max[1] * (1.0 - rng.random())

    n_succ = 0
    for i in range(n):
        if success[i]:
            n_succ += 1
    if n_succ == 0:
        return

    for c in range(2):
        if not active[c]:
            continue
        s = np.empty(n_succ)
        j = 0
        for i in range(n):
            if success[i]:
                s[j] = trial[i, c]
                j += 1
        if kind == _SHADE:
            memory[k[0], c] = _lehmer(s)
            continue
        if kind == _JADE:
            m = _lehmer(s) if c == 0 else _arith(s)
        else:
            m = _power(s)
        rate = rate_f if c == 0 else rate_c
        mu[c] = (1.0 - rate) * mu[c] + rate * m
    if kind == _SHADE:
        k[0] = (k[0] + 1) % memory.shape[0]


@njit(cache=True)
def _snapshot_kernel(kind, values, mu, memory, out):
    if kind == _SHADE:
        for r in range(memory.shape[0]):
            out[r, 0] = memory[r, 0]
            out[r, 1] = memory[r, 1]
    elif kind == _JDE or kind == _EPSDE:
        for c in range(2):
            acc = 0.0
            for i in range(values.shape[0]):
                acc += values[i, c]
            out[0, c] = acc / values.shape[0]
    else:
        out[0, 0] = mu[0]
        out[0, 1] = mu[1]
