import math

import numpy as np
import pytest
from hypothesis import strategies as st

from costbound.dist import DiscreteDistribution


def _normalise(weights):
    total = math.fsum(weights)
    return [w / total for w in weights]


@st.composite
def prob_vectors(draw, size=None, min_size=2, max_size=8, allow_zero=True):
    k = size if size is not None else draw(st.integers(min_size, max_size))
    lo = 0.0 if allow_zero else 1e-3
    weights = draw(st.lists(st.floats(lo, 1.0), min_size=k, max_size=k).filter(lambda w: math.fsum(w) > 1e-3))
    return _normalise(weights)


@st.composite
def dist_pairs(draw, min_size=2, max_size=8, allow_zero=True):
    k = draw(st.integers(min_size, max_size))
    p = draw(prob_vectors(size=k, allow_zero=allow_zero))
    q = draw(prob_vectors(size=k, allow_zero=allow_zero))
    return DiscreteDistribution.from_probs(p), DiscreteDistribution.from_probs(q)


costs = st.floats(0.01, 0.99)


def random_pair(rng: np.random.Generator, k: int, zeros: bool = True):
    p = rng.dirichlet(np.ones(k))
    q = rng.dirichlet(np.ones(k))
    if zeros and rng.random() < 0.3:
        p[rng.integers(k)] = 0.0
        p /= p.sum()
    return DiscreteDistribution.from_probs(p), DiscreteDistribution.from_probs(q)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
