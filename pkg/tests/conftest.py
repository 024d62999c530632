import numpy as np
import pytest

from online_scs.gmm import Gmm, make_flipped_gaussian, make_power_law_gaussian

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def power_law_64():
    return make_power_law_gaussian(64, 2.0)


@pytest.fixture(scope="session")
def synthetic_gmm(power_law_64):
    return Gmm([power_law_64, make_flipped_gaussian(power_law_64)])


def random_orthonormal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
