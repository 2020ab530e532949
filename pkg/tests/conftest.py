import numpy as np
import pytest

from qutritsim.config import ExperimentConfig
from qutritsim.spin_core import operating_point

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def lab(default_config):
    return default_config.lab_tensor()


@pytest.fixture(scope="session")
def system(default_config, lab):
    return operating_point(default_config.system.g, default_config.system.B0_gauss, lab)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, rank=None):
    rank = rank or rng.integers(1, 4)
    a = rng.normal(size=(3, rank)) + 1j * rng.normal(size=(3, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
