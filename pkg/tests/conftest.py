import numpy as np
import pytest

from symdist import (
    apply,
    basis_ket,
    embed_pure_input,
    universal_cloner,
    validate_sdi,
)


def random_state(rng, dim, dims=None):
    from symdist import DenseOperator

    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = m @ m.conj().T
    rho /= np.trace(rho).real
    return DenseOperator(rho, dims if dims is not None else (dim,))


@pytest.fixture(scope="session")
def cloner10():
    return universal_cloner(2, 1, 10)


@pytest.fixture(scope="session")
def cloner10_report(cloner10):
    return validate_sdi(cloner10)


@pytest.fixture(scope="session")
def cloner10_output(cloner10):
    return apply(cloner10, embed_pure_input(cloner10, basis_ket(2, 0)))
