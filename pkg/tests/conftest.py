import numpy as np
import pytest

import kalzak as kz


@pytest.fixture(scope="session")
def classic():
    return kz.classic_scalar()


@pytest.fixture(scope="session")
def classic_path(classic):
    """One medium-resolution observation path, shared across modules."""
    return kz.simulate_paths(classic, 1.0, 0.001, seed=1)[0]


@pytest.fixture(scope="session")
def classic_filter(classic, classic_path):
    return kz.run_filter(classic, classic_path)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
