import numpy as np
import pytest

from pqga.problem import QuadraticTrackingProblem


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class Interval1D(QuadraticTrackingProblem):
    """f_t(x) = (x - c_t)^2 on [-1, 1] with g(x) = a*x - b."""

    def __init__(self, targets, a=1.0, b=0.5, radius=1.0):
        super().__init__(np.asarray(targets, float)[:, None], [1.0], radius, [[a]], [b])


@pytest.fixture
def interval_problem():
    return Interval1D


ACCEPTANCE_LINES = {}


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def _record(number, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
