import numpy as np
import pytest

from apqsm.channel import REFERENCE_PD_POSITIONS, Geometry, SystemParams, build_channel_matrix, reference_geometry
from apqsm.modulation import ApqScheme, PowerVector


@pytest.fixture(scope="session")
def params():
    return SystemParams()


@pytest.fixture(scope="session")
def ref_H(params):
    return build_channel_matrix(reference_geometry(), params).gains


@pytest.fixture(scope="session")
def small_geometry():
    leds = np.array([(1.6, 1.6, 2.5), (1.4, 1.4, 2.5)])
    return Geometry(leds, np.array(REFERENCE_PD_POSITIONS))


@pytest.fixture(scope="session")
def small_H(small_geometry, params):
    return build_channel_matrix(small_geometry, params).gains


@pytest.fixture(scope="session")
def small_scheme():
    """Two LEDs, 8-ary APQ: 4 bits per channel use."""
    return ApqScheme(2, (2, 2, 2), PowerVector.lattice((2, 2, 2)))


@pytest.fixture(scope="session")
def unit_H():
    """Well-conditioned synthetic 2x2 channel for SNR sweeps in the 0-40 dB range."""
    return np.array([[1.0, 0.35], [0.3, 0.8]])


def snr_sigma(snr_db, gain=1.0):
    return gain / np.sqrt(10 ** (snr_db / 10))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def report(criterion: int, ok: bool, detail: str):
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
