import numpy as np
import pytest

from singtrace.spectral_models import harmonic


@pytest.fixture(scope="session")
def harmonic_model():
    return harmonic()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
