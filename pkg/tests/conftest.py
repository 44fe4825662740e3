import numpy as np
import pytest

from specfam import FamilySample, HermitianOperator, ParameterGrid


def random_hermitian(rng, dim):
    raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HermitianOperator((raw + raw.conj().T) / 2.0)


def constant_sample(values, n_points=5):
    """A constant diagonal family on n_points grid points."""
    ops = tuple(HermitianOperator(np.diag(np.asarray(values, dtype=float)))
                for _ in range(n_points))
    return FamilySample(ParameterGrid.linspace(0.0, 1.0, n_points), ops)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
