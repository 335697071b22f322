import numpy as np
import pytest

from mmopto import presets
from mmopto.model import CouplingTerm, MechanicalOscillator, OpticalMode, SystemModel
from mmopto.units import KHZ, MHZ, MHZ_PER_NM, NG


@pytest.fixture
def mech():
    return presets.mechanics()


@pytest.fixture
def fig2_model():
    return presets.table_model("fig2")


@pytest.fixture
def two_mode(mech):
    modes = (
        OpticalMode("L", 1.0 * MHZ, 74 * KHZ, 1.87 * MHZ_PER_NM, 1.4 * MHZ_PER_NM),
        OpticalMode("R", 1.3 * MHZ, 150 * KHZ, -1.77 * MHZ_PER_NM, -1.46 * MHZ_PER_NM),
    )
    return SystemModel(modes, (CouplingTerm(("L", "R"), 1.57 * MHZ, 1.9),), mech)


def single_mode(kappa, kappa_in, slope_osc, offset=0.0, mech=None):
    mech = mech or MechanicalOscillator(354.6 * KHZ, 3.546, 43 * NG, 0.5)
    return SystemModel((OpticalMode("A", kappa, kappa_in, 0.0, slope_osc, offset),), (), mech)


def rel(a, b, floor=0.0):
    a = np.asarray(a)
    b = np.asarray(b)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), floor))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
