import numpy as np
import pytest

from crfluid.constitutive import PowerLawIndex, StressModel
from crfluid import scenarios

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def variable_model():
    """The p in [2, 2.9] shear-thinning model used across the suite."""
    return StressModel(
        nu0=0.1,
        index=PowerLawIndex(2.0, 2.9, form="tanh_profile", center=1.0, width=0.3),
    )


@pytest.fixture(scope="session")
def newtonian_model():
    return StressModel(
        nu0=0.1, index=PowerLawIndex(2.0, 2.0, form="constant")
    )


@pytest.fixture(scope="session")
def mms_2d(variable_model):
    """Manufactured 2D case; built once (symbolic derivation is not free)."""
    return scenarios.make_manufactured("decaying_mode_2d", variable_model)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
