import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.graph import LossyGraph  # noqa: E402

SAMPLES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "samples")


@pytest.fixture
def rng():
    return np.random.default_rng(314159)


@pytest.fixture
def samples_dir():
    return SAMPLES


@pytest.fixture
def k4():
    tails = [0, 0, 0, 1, 1, 2]
    heads = [1, 2, 3, 2, 3, 3]
    return LossyGraph(4, tails, heads)


@pytest.fixture
def cycle6():
    return LossyGraph(6, list(range(6)), [1, 2, 3, 4, 5, 0])


@pytest.fixture
def lossy_k4():
    tails = [0, 0, 0, 1, 1, 2]
    heads = [1, 2, 3, 2, 3, 3]
    return LossyGraph(4, tails, heads, eta=[1.0, 1.002, 1.0, 1.001, 1.003, 1.0])
