import numpy as np
import pytest

from muhs.dynamics import Params
from muhs.grid import PeriodicGrid
from muhs.mollify import FourierProfile, ConstantProfile, HatProfile, RoughInitialData, StepProfile, make_initial
from muhs.timestep import TimeStepConfig, run


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def hat_step_data():
    return RoughInitialData(HatProfile(slope=1.0), StepProfile(1.0, 2.0, 0.25, 0.75), alpha=1.0, label="hat/step")


@pytest.fixture(scope="session")
def smooth_global_data():
    return RoughInitialData(FourierProfile(0.0, ((1, 0.0, 0.1),)), ConstantProfile(1.0), alpha=1.0)


@pytest.fixture(scope="session")
def global_run(smooth_global_data):
    """The global-regime reference run: n = 256, gamma = 0.3, t_end = 2."""
    grid = PeriodicGrid(256)
    p = Params(gamma=0.3)
    s0, init = make_initial(smooth_global_data, grid)
    cfg = TimeStepConfig(t_end=2.0, cfl_number=0.3, dt_max=1e-2)
    return run(s0, p, cfg, init, stops=(0.025, 0.05, 0.1, 0.5, 1.0)), p, init


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def report(number, title, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE.append((number, line))
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
