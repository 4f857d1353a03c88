import numpy as np
import pytest

from deformosc.algebra import DeformationSpec, OscillatorModel


def interior_hermitian(dim, rng):
    rho = np.zeros((dim, dim), dtype=complex)
    k = dim - 4
    block = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    block = block + block.conj().T
    rho[2 : dim - 2, 2 : dim - 2] = block / np.linalg.norm(block)
    return rho


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


DEFORMATIONS = [
    pytest.param(DeformationSpec.identity(), id="identity"),
    pytest.param(DeformationSpec.q_deformation(0.1), id="q0.1"),
    pytest.param(DeformationSpec.q_deformation(-0.3), id="q-0.3"),
]


def model_of(dfm, n_max=12, omega=1.0):
    return OscillatorModel(omega, dfm, n_max)
