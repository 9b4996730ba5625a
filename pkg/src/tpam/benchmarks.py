"""Classic test functions, vectorised over the last axis. All minima are 0."""
from __future__ import annotations

import numpy as np

from .pam import ConfigurationError

__all__ = ["BENCHMARKS", "evaluate_benchmark", "sphere", "ellipsoid", "rosenbrock", "rastrigin"]


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


def ellipsoid(x):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    if d == 1:
        weights = np.ones(1)
    else:
        weights = 10.0 ** (6.0 * np.arange(d) / (d - 1))
    return np.sum(weights * x * x, axis=-1)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (tail - head * head) ** 2 + (1.0 - head) ** 2, axis=-1)


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return 10.0 * d + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


BENCHMARKS = {
    "sphere": sphere,
    "ellipsoid": ellipsoid,
    "rosenbrock": rosenbrock,
    "rastrigin": rastrigin,
}


def evaluate_benchmark(fn_id: str, x):
    """Evaluate a named benchmark on one point or on the rows of a matrix."""
    try:
        fn = BENCHMARKS[fn_id]
    except KeyError:
        raise ConfigurationError(
            f"unknown benchmark {fn_id!r}; choose from {sorted(BENCHMARKS)}") from None
    out = fn(x)
    return float(out) if np.ndim(out) == 0 else out
