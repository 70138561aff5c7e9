import numpy as np
import pytest

from wignerlab.config import load_preset
from wignerlab.core import GaussianSpec, make_phase_grid
from wignerlab.representatives import KernelSetup

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Print and record one PASS/FAIL line per criterion."""
    store = request.config.stash[ACCEPTANCE_KEY]

    def log(name: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        store.append(line)
        return ok

    return log


@pytest.fixture(scope="session")
def desk():
    """Desk preset as a parsed config."""
    return load_preset("desk")


@pytest.fixture(scope="session")
def desk_setup(desk):
    return KernelSetup(desk.grid(), desk.potential(), desk.phase_data("f"), desk.phase_data("g"),
                       desk["time.dt"], desk["time.t_final"])


@pytest.fixture(scope="session")
def small_grid():
    return make_phase_grid(0.0, 0.5, 64, -0.375, 0.625, 64)


@pytest.fixture(scope="session")
def vb():
    return GaussianSpec(1.0, 0.25, 2 ** -3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
