import numpy as np
import pytest

from fracnehari import GridSpec, quadratic_ground_state, solve_scalar_v


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    mp.setenv("NEHARI_CACHE_DIR", str(tmp_path_factory.mktemp("cache")))
    yield
    mp.undo()


@pytest.fixture(scope="session")
def std_grid():
    return GridSpec(1, 8192, 200.0)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(1, 256, 60.0)


@pytest.fixture(scope="session")
def V(std_grid):
    """lambda = 1 profile of (-Delta)^{1/2} v + v = v^2."""
    return solve_scalar_v(0.5, 1.0, std_grid)


@pytest.fixture(scope="session")
def v2(std_grid):
    """lambda = 1 profile of (-Delta)^{1/2} v + v = v^2 / 2."""
    return quadratic_ground_state(0.5, 1.0, std_grid, cache=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
