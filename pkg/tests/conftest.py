import sys

import pytest

from wvrecycle.field import Grid, gaussian_field


@pytest.fixture(scope="session")
def grid():
    return Grid.symmetric()


@pytest.fixture(scope="session")
def phi0(grid):
    """Unit-power Gaussian, sigma = 1."""
    return gaussian_field(1.0, 1.0, grid)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    RESULTS = getattr(module, "RESULTS", None)
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
