import numpy as np
import pytest
from hypothesis import settings

from bfloat.core_types import ExteriorField, GridSpec, Parameters, State

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def grid():
    return GridSpec.with_spacing(1.0, 11.0, 0.01)


@pytest.fixture
def params():
    return Parameters(0.09, delta=0.1)


def smooth_state(grid, seed, amp=0.1, eps=0.0):
    """Random sum of Gaussians on each side with q made continuous."""
    rng = np.random.default_rng(seed)
    R = grid.R

    def prof(x, s):
        c = rng.uniform(0.0, 4.0, 3)
        w = rng.uniform(0.5, 2.0, 3)
        a = rng.uniform(-amp, amp, 3)
        d = s * x - R
        return sum(a[i] * np.exp(-((d - c[i]) / w[i]) ** 2) for i in range(3))

    th = ExteriorField(grid, prof(grid.x_left, -1), prof(grid.x_right, 1))
    ql, qr = prof(grid.x_left, -1), prof(grid.x_right, 1)
    shift = 0.5 * (qr[0] - ql[-1])
    ql = ql + shift * np.exp(-((grid.x_left + R) ** 2))
    qr = qr - shift * np.exp(-((grid.x_right - R) ** 2))
    ql[-1] = qr[0]
    return State(0.0, th, ExteriorField(grid, ql, qr))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
