import numpy as np
import pytest

from oseen_tp.kernel_tables import load_time_norm_table
from oseen_tp.torus import Grid


@pytest.fixture(scope="session")
def table():
    return load_time_norm_table(1.0, 1.0, 8, build=False)


@pytest.fixture
def small_grid():
    return Grid(period=1.0, n_time=8, n_space=24, box_half_length=12.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
