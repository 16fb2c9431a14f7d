import numpy as np
import pytest

from heatdec import assemble_laplacian, build_metrics
from heatdec.domains import hex_patch, torus, unit_square


@pytest.fixture(scope="session")
def hex_surface():
    return hex_patch()


@pytest.fixture(scope="session")
def hex_laplacian(hex_surface):
    return assemble_laplacian(hex_surface, build_metrics(hex_surface))


@pytest.fixture(scope="session")
def square20():
    return unit_square(20)


@pytest.fixture(scope="session")
def torus_surface():
    return torus()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
