import numpy as np
import pytest

from qarrival.config import SimulationConfig, build
from qarrival.grid import DetectorSpec, make_grid, make_region
from qarrival.pipeline import run_simulation
from qarrival.states import WaveFunction

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        name, ok, detail = results[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(3, "name", ok, "detail")``."""
    store = request.config.stash[_CRITERIA]

    def record(num, name, ok, detail=""):
        store[num] = (name, bool(ok), detail)
        print(f"criterion {num} {'PASS' if ok else 'FAIL'} {name}: {detail}")

    return record


@pytest.fixture(scope="session")
def default_setup():
    return build(SimulationConfig())


@pytest.fixture(scope="session")
def default_result(default_setup):
    return run_simulation(default_setup)


@pytest.fixture(scope="session")
def half_dt_result():
    cfg = SimulationConfig()
    return run_simulation(build(cfg.replace("propagation.dt", cfg.propagation.dt / 2)))


@pytest.fixture
def grid801():
    return make_grid(-20.0, 20.0, 801)


@pytest.fixture
def small_grid():
    return make_grid(-6.3, 6.3, 64)


@pytest.fixture
def small_region(small_grid):
    return make_region(small_grid, DetectorSpec.half_line(1.5))


def smooth_packet(grid, x0, sigma, k0):
    """Normalised Gaussian without the edge guard, for fixed-grid comparisons."""
    x = grid.x - x0
    return WaveFunction(grid, np.exp(-(x**2) / (4 * sigma**2) + 1j * k0 * x)).normalized()
