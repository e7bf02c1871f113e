"""One-hidden-layer sparse autoencoder trained by L-BFGS.

The objective is mean squared reconstruction error plus an L2 weight
penalty on both weight matrices (biases excluded) plus a KL sparsity
penalty that pushes each hidden unit's mean activation toward a small
target. Both layers use the logistic sigmoid, so hidden activations can
be read as Bernoulli means.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .optimize import minimize_lbfgs
from .validation import NumericError, check_finite, check_matrix

# Mean activations are clamped away from {0, 1} inside the KL penalty;
# saturated sigmoids can otherwise reach floating-point 0 or 1 exactly.
ACTIVATION_CLAMP = 1e-8


def sigmoid(z):
    """Numerically stable elementwise logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class AutoencoderParams:
    """Weights and biases of the encoder/decoder pair.

    ``W1`` is (hidden_dim, input_dim), ``W2`` is (input_dim, hidden_dim);
    biases match their layer's output size. The flattened layout used by
    the optimizer is W1 (row-major), b1, W2 (row-major), b2.
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        h, d = self.W1.shape
        if self.b1.shape != (h,) or self.W2.shape != (d, h) or self.b2.shape != (d,):
            raise ValueError(
                "inconsistent parameter shapes: "
                f"W1 {self.W1.shape}, b1 {self.b1.shape}, "
                f"W2 {self.W2.shape}, b2 {self.b2.shape}"
            )
        for name in ("W1", "b1", "W2", "b2"):
            check_finite(getattr(self, name), name)

    @property
    def input_dim(self):
        return self.W1.shape[1]

    @property
    def hidden_dim(self):
        return self.W1.shape[0]

    def to_vector(self):
        return np.concatenate(
            [self.W1.ravel(), self.b1, self.W2.ravel(), self.b2]
        )

    @classmethod
    def from_vector(cls, vector, input_dim, hidden_dim):
        vector = np.asarray(vector, dtype=np.float64)
        sizes = [hidden_dim * input_dim, hidden_dim, input_dim * hidden_dim, input_dim]
        if vector.shape != (sum(sizes),):
            raise ValueError(
                f"expected flat vector of length {sum(sizes)}, got {vector.shape}"
            )
        offsets = np.cumsum([0] + sizes)
        return cls(
            W1=vector[offsets[0]:offsets[1]].reshape(hidden_dim, input_dim).copy(),
            b1=vector[offsets[1]:offsets[2]].copy(),
            W2=vector[offsets[2]:offsets[3]].reshape(input_dim, hidden_dim).copy(),
            b2=vector[offsets[3]:offsets[4]].copy(),
        )


@dataclass(frozen=True)
class SparsityHyper:
    """Cost weights: L2 weight decay, sparsity penalty weight and target."""

    weight_decay: float = 1e-4
    sparsity_weight: float = 3.0
    sparsity_target: float = 0.05

    def __post_init__(self):
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.sparsity_weight < 0:
            raise ValueError("sparsity_weight must be >= 0")
        if not 0.0 < self.sparsity_target < 1.0:
            raise ValueError("sparsity_target must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class TrainReport:
    """Optimizer trace: accepted steps, per-step cost, final gradient norm."""

    iterations_run: int
    cost_trace: tuple
    final_gradient_norm: float
    converged: bool
    message: str


def init_params(input_dim, hidden_dim, seed):
    """Draw weights uniformly from [-r, r], r = sqrt(6/(in + hidden + 1)).

    Biases start at zero. Deterministic under ``seed``; W1 is drawn
    before W2.
    """
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError("dimensions must be >= 1")
    r = np.sqrt(6.0) / np.sqrt(input_dim + hidden_dim + 1)
    rng = np.random.default_rng(seed)
    return AutoencoderParams(
        W1=rng.uniform(-r, r, size=(hidden_dim, input_dim)),
        b1=np.zeros(hidden_dim),
        W2=rng.uniform(-r, r, size=(input_dim, hidden_dim)),
        b2=np.zeros(input_dim),
    )


def forward(params, X):
    """Encode then decode a batch.

    Parameters
    ----------
    params : AutoencoderParams
    X : ndarray of shape (n_samples, input_dim)

    Returns
    -------
    (hidden, output)
        Sigmoid activations of shape (n_samples, hidden_dim) and
        (n_samples, input_dim).
    """
    X = check_matrix(X, n_features=params.input_dim, name="batch")
    check_finite(X, "batch")
    hidden = sigmoid(X @ params.W1.T + params.b1)
    output = sigmoid(hidden @ params.W2.T + params.b2)
    return hidden, output


def mean_hidden_activation(params, X):
    """Per-unit mean of the hidden activations over the batch."""
    hidden, _ = forward(params, X)
    return hidden.mean(axis=0)


def kl_divergence(target, mean_activations):
    """Bernoulli KL divergence summed over hidden units.

    ``sum_j t*log(t/m_j) + (1-t)*log((1-t)/(1-m_j))``, nonnegative and
    zero exactly when every mean activation equals the target. Mean
    activations are clamped to ``[ACTIVATION_CLAMP, 1 - ACTIVATION_CLAMP]``
    to tolerate saturated units.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie strictly inside (0, 1)")
    m = np.asarray(mean_activations, dtype=np.float64)
    if not np.all(np.isfinite(m)) or m.min() < 0.0 or m.max() > 1.0:
        raise NumericError(
            "mean activations must be finite and within [0, 1]"
        )
    m = np.clip(m, ACTIVATION_CLAMP, 1.0 - ACTIVATION_CLAMP)
    t = target
    return float(
        np.sum(t * np.log(t / m) + (1.0 - t) * np.log((1.0 - t) / (1.0 - m)))
    )


def cost_and_gradient(params, X, hyper):
    """Objective value and its flattened analytic gradient.

    Single shared forward pass; gradient layout matches
    ``AutoencoderParams.to_vector``.
    """
    X = check_matrix(X, n_features=params.input_dim, name="batch")
    check_finite(X, "batch")
    m = X.shape[0]
    hidden = sigmoid(X @ params.W1.T + params.b1)
    output = sigmoid(hidden @ params.W2.T + params.b2)

    diff = output - X
    reconstruction = float(np.sum(diff * diff)) / m
    decay = float(np.sum(params.W1**2) + np.sum(params.W2**2))

    rho = hyper.sparsity_target
    rho_hat = np.clip(
        hidden.mean(axis=0), ACTIVATION_CLAMP, 1.0 - ACTIVATION_CLAMP
    )
    kl = float(
        np.sum(
            rho * np.log(rho / rho_hat)
            + (1.0 - rho) * np.log((1.0 - rho) / (1.0 - rho_hat))
        )
    )
    total = reconstruction + hyper.weight_decay * decay + hyper.sparsity_weight * kl
    if not np.isfinite(total):
        raise NumericError("cost is non-finite")

    delta_out = (2.0 / m) * diff * output * (1.0 - output)
    kl_slope = -rho / rho_hat + (1.0 - rho) / (1.0 - rho_hat)
    delta_hidden = (
        delta_out @ params.W2 + (hyper.sparsity_weight / m) * kl_slope
    ) * hidden * (1.0 - hidden)

    grad_W2 = delta_out.T @ hidden + 2.0 * hyper.weight_decay * params.W2
    grad_b2 = delta_out.sum(axis=0)
    grad_W1 = delta_hidden.T @ X + 2.0 * hyper.weight_decay * params.W1
    grad_b1 = delta_hidden.sum(axis=0)
    gradient_vec = np.concatenate(
        [grad_W1.ravel(), grad_b1, grad_W2.ravel(), grad_b2]
    )
    return total, gradient_vec


def cost(params, X, hyper):
    """Objective value: reconstruction + weight decay + sparsity penalty."""
    value, _ = cost_and_gradient(params, X, hyper)
    return value


def gradient(params, X, hyper):
    """Flattened analytic gradient (layout: W1 row-major, b1, W2, b2)."""
    _, grad = cost_and_gradient(params, X, hyper)
    return grad


def train_lbfgs(init, X, hyper, max_iterations, memory=20, grad_tol=1e-7):
    """Minimize the autoencoder objective from ``init``.

    Returns the trained parameters and a :class:`TrainReport`. With
    ``max_iterations = 0`` the initial parameters come back unchanged
    and the cost trace is empty. A failed line search terminates early
    with ``iterations_run`` below the requested maximum.
    """
    X = check_matrix(X, n_features=init.input_dim, name="batch")
    input_dim, hidden_dim = init.input_dim, init.hidden_dim

    def objective(theta):
        params = AutoencoderParams.from_vector(theta, input_dim, hidden_dim)
        return cost_and_gradient(params, X, hyper)

    result = minimize_lbfgs(
        objective,
        init.to_vector(),
        max_iterations=max_iterations,
        memory=memory,
        grad_tol=grad_tol,
    )
    trained = AutoencoderParams.from_vector(result.x, input_dim, hidden_dim)
    report = TrainReport(
        iterations_run=result.iterations,
        cost_trace=tuple(result.cost_trace),
        final_gradient_norm=result.grad_norm,
        converged=result.converged,
        message=result.message,
    )
    return trained, report


class SparseAutoencoder(BaseEstimator, TransformerMixin):
    """Scikit-learn style wrapper around the functional trainer.

    ``fit`` learns weights on rows of ``X`` (typically whitened patch
    vectors); ``transform`` returns hidden activations.

    Attributes
    ----------
    params_ : AutoencoderParams
    report_ : TrainReport
    """

    def __init__(
        self,
        hidden_dim=4000,
        weight_decay=1e-4,
        sparsity_weight=3.0,
        sparsity_target=0.05,
        max_iterations=700,
        memory=20,
        grad_tol=1e-7,
        seed=0,
    ):
        self.hidden_dim = hidden_dim
        self.weight_decay = weight_decay
        self.sparsity_weight = sparsity_weight
        self.sparsity_target = sparsity_target
        self.max_iterations = max_iterations
        self.memory = memory
        self.grad_tol = grad_tol
        self.seed = seed

    def fit(self, X, y=None):
        X = check_matrix(X, name="X")
        hyper = SparsityHyper(
            weight_decay=self.weight_decay,
            sparsity_weight=self.sparsity_weight,
            sparsity_target=self.sparsity_target,
        )
        init = init_params(X.shape[1], self.hidden_dim, self.seed)
        self.params_, self.report_ = train_lbfgs(
            init,
            X,
            hyper,
            max_iterations=self.max_iterations,
            memory=self.memory,
            grad_tol=self.grad_tol,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "params_"):
            raise NotFittedError("SparseAutoencoder instance is not fitted yet")
        hidden, _ = forward(self.params_, X)
        return hidden
