import numpy as np
import pytest

from fingervein import AutoencoderParams, PCAWhitening, init_params


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_params():
    """3-5-3 network with random weights."""
    return init_params(3, 5, seed=7)


@pytest.fixture
def identity_whitening():
    """A fitted whitening transform that passes vectors through unchanged."""
    def build(dim):
        transform = PCAWhitening(n_components=dim, epsilon=1e-12)
        transform.mean_ = np.zeros(dim)
        transform.projection_ = np.eye(dim)
        transform.n_features_in_ = dim
        return transform

    return build


@pytest.fixture
def zero_params():
    def build(input_dim, hidden_dim):
        return AutoencoderParams(
            W1=np.zeros((hidden_dim, input_dim)),
            b1=np.zeros(hidden_dim),
            W2=np.zeros((input_dim, hidden_dim)),
            b2=np.zeros(input_dim),
        )

    return build
