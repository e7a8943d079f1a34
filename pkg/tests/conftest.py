import numpy as np
import pytest

from gibbslab import linalg, lindblad, spinsys


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def random_hermitian(rng, dim, norm=None):
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    M = 0.5 * (G + G.conj().T)
    if norm is not None:
        M *= norm / linalg.op_norm(M)
    return M


def random_state(rng, dim):
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


@pytest.fixture(scope="session")
def tfim3():
    """3-qubit mixed-field chain with a generic spectrum."""
    H = spinsys.build_tfim_chain(3, 1.0, 0.6)
    spec = linalg.hermitian_eig(H.to_dense())
    return H, spec


@pytest.fixture(scope="session")
def gen3(tfim3):
    """Assembled Metropolis generator, jumps on site 0, beta = sigma = 1."""
    H, spec = tfim3
    w = lindblad.Weight.metropolis(1.0)
    return lindblad.assemble(spec, spinsys.single_site_jumps((0,)), w)
