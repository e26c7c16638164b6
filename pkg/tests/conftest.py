import numpy as np
import pytest

from geomind import (CognitionParams, ConformalFieldMetric, FlatMetric,
                     SphereMetric, TokenEmbedding, TokenField)


def make_field(means, dim=2, bandwidth=1.0, epsilon=1.0, weights=None, covs=None, ids=None):
    """Build a small field from plain lists; zero covariance by default."""
    means = [np.asarray(m, dtype=float) for m in means]
    n = len(means)
    weights = weights if weights is not None else [1.0] * n
    covs = covs if covs is not None else [np.zeros((dim, dim))] * n
    ids = ids if ids is not None else list(range(1, n + 1))
    tokens = tuple(TokenEmbedding(i, m, c, w) for i, m, c, w in zip(ids, means, covs, weights))
    return TokenField(tokens, dim, bandwidth, epsilon)


@pytest.fixture
def empty_field():
    return TokenField((), 2, 1.0, 1.0)


@pytest.fixture
def one_token_field():
    return make_field([[0.0, 0.0]], bandwidth=1.0, epsilon=1.0)


@pytest.fixture
def random_field():
    rng = np.random.default_rng(42)
    return make_field([rng.uniform(-1, 1, 2) for _ in range(5)],
                      bandwidth=0.8, epsilon=0.5)


@pytest.fixture
def flat():
    return FlatMetric(2)


@pytest.fixture
def sphere():
    return SphereMetric(1.0)


@pytest.fixture
def identity_params():
    return CognitionParams.defaults(2)
