import numpy as np
import pytest

from distreg import make_discrete


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_discrete(rng, max_support=8, dim=1, scale=1.0, min_support=1):
    m = int(rng.integers(min_support, max_support + 1))
    atoms = rng.normal(size=(m, dim)) * scale
    w = rng.random(m) + 0.05
    return make_discrete(atoms, w / w.sum())
