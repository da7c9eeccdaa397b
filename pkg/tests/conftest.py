import numpy as np
import pytest

from logscatter.dyson import random_hermitian


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def herm(rng, n, scale=1.0):
    return random_hermitian(rng, n, scale)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
