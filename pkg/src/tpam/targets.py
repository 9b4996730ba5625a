"""Target parameter trajectories that a PAM is asked to track."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .pam import ConfigurationError

__all__ = [
    "TargetFamily",
    "TargetSpec",
    "TargetState",
    "eval_target",
    "reflect",
    "step_random_walk",
    "trajectory",
]

_AMPLITUDE = 0.4
_OFFSET = 0.5


class TargetFamily(str, enum.Enum):
    CONST = "const"
    LIN_INC = "lin_inc"
    LIN_DEC = "lin_dec"
    SIN = "sin"
    RANDOM_WALK = "random_walk"

    @classmethod
    def parse(cls, value) -> "TargetFamily":
        if isinstance(value, TargetFamily):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"unknown target family {value!r}") from None


@dataclass(frozen=True)
class TargetSpec:
    """One target function. ``omega`` is read by SIN, ``step`` by RANDOM_WALK."""

    family: TargetFamily = TargetFamily.LIN_INC
    omega: float = 10.0
    step: float = 0.05
    lo: float = 0.1
    hi: float = 0.9
    value: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "family", TargetFamily.parse(self.family))
        if not self.lo < self.hi:
            raise ConfigurationError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.family is TargetFamily.SIN and not self.omega > 0:
            raise ConfigurationError(f"omega must be > 0, got {self.omega}")
        if self.family is TargetFamily.RANDOM_WALK:
            if not 0 < self.step <= 1:
                raise ConfigurationError(f"step must lie in (0, 1], got {self.step}")
            if self.step > self.hi - self.lo:
                raise ConfigurationError(
                    f"step {self.step} exceeds the band width; one reflection "
                    "would not keep the walk inside [lo, hi]")
        if self.family is TargetFamily.CONST and not 0 <= self.value <= 1:
            raise ConfigurationError(f"const value must lie in [0, 1], got {self.value}")

    @property
    def label(self) -> str:
        if self.family is TargetFamily.SIN:
            return f"sin(omega={self.omega:g})"
        if self.family is TargetFamily.RANDOM_WALK:
            return f"random_walk(s={self.step:g})"
        if self.family is TargetFamily.CONST:
            return f"const({self.value:g})"
        return self.family.value


@dataclass
class TargetState:
    """Position of a random walk after iteration ``t``."""

    current: float = _OFFSET
    t: int = 0


def reflect(value: float, lo: float = 0.1, hi: float = 0.9) -> float:
    """Mirror an overshoot back across the violated bound (single reflection)."""
    if value > hi:
        return 2.0 * hi - value
    if value < lo:
        return 2.0 * lo - value
    return value


def step_random_walk(state: TargetState, s: float, rng: np.random.Generator,
                     lo: float = 0.1, hi: float = 0.9) -> float:
    state.current = reflect(state.current + s * rng.uniform(-1.0, 1.0), lo, hi)
    state.t += 1
    return state.current


def eval_target(spec: TargetSpec, state: TargetState | None, t: int, t_max: int,
                rng: np.random.Generator | None = None) -> float:
    """Target value at iteration ``t`` (1-based), with ``n_t = t / t_max``.

    The random walk needs ``state`` holding the position of ``t - 1``; at
    ``t == 1`` it is reset to the 0.5 start.
    """
    if not 1 <= t <= t_max:
        raise ValueError(f"t must lie in [1, {t_max}], got {t}")
    n_t = t / t_max
    fam = spec.family
    if fam is TargetFamily.LIN_INC:
        return _AMPLITUDE * n_t + _OFFSET
    if fam is TargetFamily.LIN_DEC:
        return -_AMPLITUDE * n_t + _OFFSET
    if fam is TargetFamily.SIN:
        return _AMPLITUDE * math.sin(spec.omega * n_t) + _OFFSET
    if fam is TargetFamily.CONST:
        return spec.value
    if state is None or rng is None:
        raise ValueError("random-walk targets need a TargetState and a generator")
    if t == 1:
        state.current, state.t = _OFFSET, 1
        return state.current
    return step_random_walk(state, spec.step, rng, spec.lo, spec.hi)


def trajectory(spec: TargetSpec, t_max: int,
               rng: np.random.Generator | None = None) -> np.ndarray:
    """Targets for ``t = 1..t_max`` as an array of length ``t_max``.

    Equivalent to calling :func:`eval_target` for each ``t`` in order; the
    random-walk increments are drawn in one batch, which consumes the
    generator identically.
    """
    n_t = np.arange(1, t_max + 1) / t_max
    fam = spec.family
    if fam is TargetFamily.LIN_INC:
        return _AMPLITUDE * n_t + _OFFSET
    if fam is TargetFamily.LIN_DEC:
        return -_AMPLITUDE * n_t + _OFFSET
    if fam is TargetFamily.SIN:
        return _AMPLITUDE * np.sin(spec.omega * n_t) + _OFFSET
    if fam is TargetFamily.CONST:
        return np.full(t_max, float(spec.value))
    if rng is None:
        raise ValueError("random-walk targets need a generator")
    steps = spec.step * rng.uniform(-1.0, 1.0, size=t_max - 1)
    out = np.empty(t_max)
    pos = _OFFSET
    out[0] = pos
    lo, hi = spec.lo, spec.hi
    for j, d in enumerate(steps.tolist(), start=1):
        pos = reflect(pos + d, lo, hi)
        out[j] = pos
    return out
