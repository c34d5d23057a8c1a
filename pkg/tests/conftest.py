import math

import pytest

from dbbsde.lattice import make_grid


def pytest_collection_modifyitems(config, items):
    # oracle and unit checks first, acceptance gate last
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


def grid_with_kappa(kappa: float, n: int = 1, T: float = 1.0):
    """Grid whose no-jump probability is exactly the requested kappa (up to rounding)."""
    return make_grid(n, T, -math.log(kappa) * n / T)


@pytest.fixture
def g100():
    return make_grid(100, 1.0, 5.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
