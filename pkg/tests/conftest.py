import numpy as np
import pytest

from povmtree import fixtures
from povmtree.compiler import compile_tree


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def qutrit():
    return fixtures.qutrit_povm()


@pytest.fixture
def qutrit_p():
    return fixtures.qutrit_projector()


@pytest.fixture
def qutrit_tree(qutrit, qutrit_p):
    return compile_tree(qutrit, qutrit_p)


def random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return a + a.conj().T


def random_complex(rows, cols, rng):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
