import numpy as np
import pytest

from cgl_lab.state import PlasmaState


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def iso():
    return PlasmaState(1.0, [0, 0, 0], [1, 0, 0], 1.0, 1.0)


@pytest.fixture
def firehose():
    # |H|^2 = 2, tau = (5 - 1) / 2 = 2
    return PlasmaState(1.0, [0, 0, 0], [1, 1, 0], 5.0, 1.0)


@pytest.fixture
def mirror():
    # |H|^2 = 4, a_p = 26, beta_perp = 13
    return PlasmaState(1.0, [0, 0, 0], [2, 0, 0], 1.0, 26.0)
