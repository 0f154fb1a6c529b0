import numpy as np
import pytest
from hypothesis import settings

from duonet.graph import build_graph
from duonet.problems import quadratic_consensus

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# filled in by test_acceptance.py, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def p3():
    return build_graph("path", 3)


@pytest.fixture
def p3_quadratic(p3):
    """Path m=3, n=1, mu=1, centres (0, 3, 6): x* = (3, 3, 3), F* = 9."""
    return quadratic_consensus(p3, n=1, mu=1.0)


@pytest.fixture
def p3_gaussian(p3):
    """Path m=3, n=2, mu=1, sigma_x^2 = 1."""
    return quadratic_consensus(p3, n=2, mu=1.0, sigma_x_sq=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
