import numpy as np
import pytest
from hypothesis import settings

from segsample.segments import build_segment_set

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def example_square(beta: float, gamma: float = 1.0, edges=None):
    """Four vertices (0,beta), (beta,0), (gamma,beta), (0,0) in columns."""
    X = [[0.0, beta, gamma, 0.0], [beta, 0.0, beta, 0.0]]
    if edges is None:
        edges = [(1, 2), (2, 3), (3, 4)] if beta < gamma else [(1, 2), (3, 4)]
    return build_segment_set(X, edges)


@pytest.fixture
def antithetic():
    return build_segment_set([[1.0, 0.0], [0.0, 1.0]], [(1, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
