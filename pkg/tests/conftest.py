import numpy as np
import pytest

from kdlab import driver as drv
from kdlab import velocity as vel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two():
    return vel.two_velocity()


@pytest.fixture
def params():
    return drv.make_params(J=4, theta=1.0, scale=1.0, decay=2.0, sin_ratio=0.5, nx=64)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
