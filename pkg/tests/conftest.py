import numpy as np
import pytest

from iontrap_bench.constants import YB171
from iontrap_bench.fivewire import demo_trap

RADIAL_TARGET = 2 * np.pi * 3.52e6


@pytest.fixture(scope="session")
def demo():
    """Bundled five-wire trap with the RF amplitude calibrated once."""
    return demo_trap(species=YB171, calibrate_radial=RADIAL_TARGET)


@pytest.fixture(scope="session")
def demo_uncalibrated():
    return demo_trap()
