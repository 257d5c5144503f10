import pytest

from babenko_solitary.babenko import (
    PhysicalParams,
    SolverOptions,
    fixed_point_solve,
    rescale_to_physical,
)
from babenko_solitary.spectral import make_grid

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def grid():
    return make_grid(400.0, 8192)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(100.0, 1024)


@pytest.fixture(scope="session")
def solutions(grid):
    """Plain-iteration solutions keyed by epsilon (computed lazily)."""
    cache = {}

    def get(eps, torus=False):
        key = (eps, torus)
        if key not in cache:
            cache[key] = fixed_point_solve(eps, grid, SolverOptions(torus_correction=torus))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def profiles(solutions):
    cache = {}

    def get(eps, torus=False):
        key = (eps, torus)
        if key not in cache:
            cache[key] = rescale_to_physical(solutions(eps, torus), PhysicalParams.normalized(eps))
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
