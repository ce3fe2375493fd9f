import numpy as np
import pytest

from cqed_thermo import kernels
from cqed_thermo.homodyne import MeasurementModel
from cqed_thermo.protocol import mhz, transmon_protocol

BACKENDS = kernels.available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.load(request.param)


@pytest.fixture
def protocol():
    return transmon_protocol()


@pytest.fixture
def weak_model():
    """chi/2pi = -0.5 MHz, kappa/2pi = 10 MHz, nbar = 0.4, dt = 1 ns."""
    return MeasurementModel(mhz(-0.5), mhz(10), 0.4, 1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    return pytestconfig.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
