import numpy as np
import pytest

from fermiflux import chain
from fermiflux.randgen import random_thermal_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def chain2():
    return chain.build(chain.ChainSpec(length=2, beta0=1.0, betaL=0.0))


@pytest.fixture
def chain2_spec():
    return chain.ChainSpec(length=2, beta0=1.0, betaL=0.0)


def make_models(seed, count, **kw):
    """Deterministic batch of random ergodic thermal models."""
    r = np.random.default_rng(seed)
    return [random_thermal_model(r, **kw) for _ in range(count)]
