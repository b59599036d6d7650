import numpy as np
import pytest
from hypothesis import settings

from ymgap.lattice import Grid
from ymgap.lie import build_algebra

settings.register_profile("ymgap", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("ymgap")


@pytest.fixture(scope="session")
def su2():
    return build_algebra("su", 2)


@pytest.fixture(scope="session")
def su3():
    return build_algebra("su", 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_connection(g, grid, rng, amplitude=0.3):
    return amplitude * rng.normal(size=grid.gauge_shape(g))


@pytest.fixture(scope="session")
def grid4():
    return Grid(4, 1.0)
