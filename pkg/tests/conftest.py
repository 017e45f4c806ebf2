import math

import numpy as np
import pytest

from injective_norm import SolverOptions
from tensor_core import SpaceShape, standard_state


@pytest.fixture
def opts():
    """Pinned seed and a reduced restart count for fast runs."""
    return SolverOptions(restarts=8, max_iterations=300, tolerance=1e-10, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ghz3():
    return standard_state("ghz", SpaceShape((2, 2, 2)))


@pytest.fixture
def w3():
    return standard_state("w", SpaceShape((2, 2, 2)))


@pytest.fixture
def bell():
    return standard_state("bell", SpaceShape((2, 2)))


@pytest.fixture
def inv_sqrt2():
    return 1 / math.sqrt(2)
