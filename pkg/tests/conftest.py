import numpy as np
import pytest

from threebody1d.grid import GridDescriptor, SpectralParameter
from threebody1d.operators import free_resolvent
from threebody1d.pair import smooth_bump


@pytest.fixture(scope="session")
def desk():
    return GridDescriptor.preset("desk")


@pytest.fixture(scope="session")
def bump():
    return smooth_bump(1.0, 1.5)


@pytest.fixture(scope="session")
def lam02():
    return SpectralParameter(1.0, 0.2)


@pytest.fixture(scope="session")
def r0_desk(desk, lam02):
    return free_resolvent(desk, lam02)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
