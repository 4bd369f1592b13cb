import numpy as np
import pytest

from mvpb.collision import assemble_L
from mvpb.velocity import build_basis

# r0 estimate for the default basis, frozen from estimate_r0 (bisection tolerance 1e-3)
R0_DEFAULT = 0.7914


@pytest.fixture(scope="session")
def basis():
    return build_basis()


@pytest.fixture(scope="session")
def op(basis):
    return assemble_L(basis)


@pytest.fixture(scope="session")
def small_op():
    return assemble_L(build_basis(6, 24))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
