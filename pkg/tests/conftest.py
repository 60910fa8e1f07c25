import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scwlearn import CovarianceMode, Example, GaussianState  # noqa: E402
from oracles import random_spd  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, d=None, m_range=(-3.0, 3.0)):
    """Random full-covariance state and example with a prescribed margin."""
    d = int(rng.integers(1, 6)) if d is None else d
    sigma = random_spd(rng, d)
    x = rng.normal(size=d)
    while np.linalg.norm(x) < 1e-3:
        x = rng.normal(size=d)
    y = int(rng.choice([-1, 1]))
    mu = rng.normal(size=d)
    target = rng.uniform(*m_range)
    mu = mu + (target - y * mu @ x) * y * x / (x @ x)
    return GaussianState(mu, sigma, CovarianceMode.FULL), Example.from_dense(x, y), y
