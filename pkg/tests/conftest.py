from collections import deque

import numpy as np
import pytest
from numba.core.registry import CPUDispatcher

from tpam import pam, simulation


class ScriptedRng:
    """Stand-in generator that replays fixed draws, one queue per method.

    ``normal`` and ``standard_cauchy`` return the scripted raw values as given
    (the location/scale arguments are ignored), so tests can state draws in
    the units of the rule under test.
    """

    def __init__(self, random=(), cauchy=(), normal=(), integers=(), permutation=(),
                 uniform=()):
        self.queues = {
            "random": deque(random),
            "cauchy": deque(cauchy),
            "normal": deque(normal),
            "integers": deque(integers),
            "permutation": deque(permutation),
            "uniform": deque(uniform),
        }

    def _pop(self, name, size=None):
        q = self.queues[name]
        if size is None:
            if not q:
                raise AssertionError(f"script ran out of {name} draws")
            return q.popleft()
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape))
        if len(q) < count:
            raise AssertionError(f"script ran out of {name} draws")
        return np.array([q.popleft() for _ in range(count)]).reshape(shape)

    def random(self, size=None):
        return self._pop("random", size)

    def standard_cauchy(self, size=None):
        return self._pop("cauchy", size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._pop("normal", size)

    def integers(self, low, high=None, size=None):
        return self._pop("integers", size)

    def permutation(self, n):
        return np.asarray(self._pop("permutation"))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._pop("uniform", size)

    def exhausted(self) -> bool:
        return all(not q for q in self.queues.values())


@pytest.fixture
def scripted():
    return ScriptedRng


@pytest.fixture
def pure_kernels(monkeypatch):
    """Swap every compiled kernel for its Python body so scripted generators work."""
    for mod in (pam, simulation):
        for name, obj in list(vars(mod).items()):
            if isinstance(obj, CPUDispatcher):
                monkeypatch.setattr(mod, name, obj.py_func)
    yield


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
