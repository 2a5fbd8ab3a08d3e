import numpy as np
import pytest

from latticeym.quadrature import QuadratureSpec


@pytest.fixture
def quad():
    return QuadratureSpec()


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(2024))
