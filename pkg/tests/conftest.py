import numpy as np
import pytest

from qgplab.models import RobustModelParams, RotatingSpinParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


@pytest.fixture(scope="session")
def fig1_params():
    """Robust-model parameters of the reference figure: strong static field."""
    return RobustModelParams(eta=1.0, eta0=20.0, eta1=1.0, eta2=100.0)


@pytest.fixture(scope="session")
def regime_unfaithful():
    """Slow sweep, small transverse field: gap criterion passes, evolution
    still leaves the orbit (the QGP eats the gap)."""
    return RotatingSpinParams(eta=0.995, xi=0.0999, K=1.0)


@pytest.fixture(scope="session")
def regime_rescued():
    """Fast sweep: gap criterion fails but the QGP-corrected one passes and
    the evolution stays adiabatic."""
    return RotatingSpinParams(eta=1.0, xi=0.05, K=200.0)


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)
