import os

import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addini("maslov_seed", "seed for randomized suites", default="0")


@pytest.fixture
def rng():
    seed = int(os.environ.get("MASLOV_SEED", "0"))
    return np.random.default_rng(seed)
