import os

import numpy as np
import pytest

from gpvm.fixtures import sigma_x, sigma_y, sigma_z
from gpvm.joint import JointObservable
from gpvm.utils import set_verbosity

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data')

set_verbosity(False)


@pytest.fixture
def data():
    return lambda name: os.path.join(DATA, name)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))


@pytest.fixture
def xy_joint():
    return JointObservable(sigma_x(), sigma_y())


@pytest.fixture
def zz_joint():
    return JointObservable(sigma_z(), sigma_z())
