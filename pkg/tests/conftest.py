import numpy as np
import pytest

from isacsar._common import C
from isacsar.channel import LinkBudget
from isacsar.geometry import (BistaticGeometry, PointTarget, SceneGrid, ground_offset,
                              make_linear_trajectory)
from isacsar.waveform import BASELINE_PROFILE, random_ofdm_symbol

CARRIER = 5.9e9
WAVELENGTH = C / CARRIER

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ofdm_pulse():
    return random_ofdm_symbol(BASELINE_PROFILE, np.random.default_rng(7))[1]


def side_looking_scene(n_pulses=256, prf=1000.0, altitude=100.0, off_nadir=45.0):
    """Straight track along x at a quarter wavelength per pulse, target broadside."""
    v = WAVELENGTH / 4 * prf
    traj = make_linear_trajectory([-v * (n_pulses - 1) / prf / 2, 0.0, altitude],
                                  [v, 0.0, 0.0], prf, n_pulses)
    y = float(ground_offset(altitude, off_nadir))
    return BistaticGeometry.monostatic(traj), PointTarget([0.0, y, 0.0])


@pytest.fixture(scope="session")
def scene():
    return side_looking_scene()


@pytest.fixture(scope="session")
def budget():
    return LinkBudget()


@pytest.fixture(scope="session")
def small_grid(scene):
    _, tgt = scene
    return SceneGrid.centered(tgt.position[:2], 16, 16, 0.5, 3.0)


@pytest.fixture
def acceptance():
    """Record a criterion outcome; printed in the terminal summary."""

    def record(label, ok, detail):
        _ACCEPTANCE.append((label, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
