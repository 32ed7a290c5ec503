import numpy as np
import pytest
from hypothesis import settings

from radres.potential import RadialPotential

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


class Func(RadialPotential):
    """Ad-hoc potential from vectorized callables (test helper)."""

    def __init__(self, f, df=None, sup=1.0):
        self._f, self._df, self._sup = f, df, sup
        self.differentiable = df is not None

    def _values(self, r):
        return self._f(r)

    def _derivative(self, r):
        return self._df(r)

    @property
    def sup_norm(self):
        return self._sup


@pytest.fixture
def func():
    return Func


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(id, passed, detail, seconds)``."""
    def record(cid, passed, detail, seconds):
        line = f"criterion {cid}: {'PASS' if passed else 'FAIL'} ({seconds:.1f}s) {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
