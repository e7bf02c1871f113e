"""PCA whitening with eigenvalue regularization.

Decorrelates patch vectors and equalizes their variances before feature
learning. Follows the scikit-learn transformer protocol: rows are samples.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .validation import NumericError, check_finite, check_matrix

# Eigenvalues of a sample covariance are nonnegative in exact arithmetic;
# anything below this is a numerical fault, not rounding.
_EIGENVALUE_TOLERANCE = -1e-10


class PCAWhitening(BaseEstimator, TransformerMixin):
    """Project data onto leading principal axes scaled to unit variance.

    The fitted projection is ``diag(1/sqrt(l + epsilon)) @ U.T`` where
    ``U`` holds the leading eigenvectors of the sample covariance
    (computed with the 1/n convention) and ``l`` the matching eigenvalues
    in descending order. ``epsilon`` damps directions with near-zero
    variance so they do not amplify noise.

    Parameters
    ----------
    n_components : int or None
        Number of leading eigenpairs to keep; ``None`` keeps all.
    epsilon : float
        Positive eigenvalue regularizer, added before the inverse square
        root.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    projection_ : ndarray of shape (n_components, n_features)
    eigenvalues_ : ndarray of shape (n_features,)
        Covariance eigenvalues in descending order, before ``epsilon``.
    n_features_in_ : int
    """

    def __init__(self, n_components=None, epsilon=0.1):
        self.n_components = n_components
        self.epsilon = epsilon

    def fit(self, X, y=None):
        X = check_matrix(X, name="X")
        check_finite(X, "X")
        n_samples, n_features = X.shape
        k = n_features if self.n_components is None else int(self.n_components)
        if k < 1 or k > n_features:
            raise ValueError(
                f"n_components must be in [1, {n_features}], got {self.n_components}"
            )
        if n_samples < k:
            raise ValueError(
                f"need at least n_components={k} samples, got {n_samples}"
            )
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        cov = centered.T @ centered / n_samples
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        eigenvalues = eigenvalues[::-1]
        eigenvectors = eigenvectors[:, ::-1]
        if eigenvalues.min() < _EIGENVALUE_TOLERANCE:
            raise NumericError(
                f"covariance produced eigenvalue {eigenvalues.min()} < 0"
            )
        eigenvalues = np.clip(eigenvalues, 0.0, None)

        # Fix eigenvector signs so results do not depend on the LAPACK
        # backend: largest-magnitude entry of each vector is positive.
        flip = np.take_along_axis(
            eigenvectors,
            np.abs(eigenvectors).argmax(axis=0, keepdims=True),
            axis=0,
        )[0]
        eigenvectors = eigenvectors * np.where(flip < 0, -1.0, 1.0)

        self.eigenvalues_ = eigenvalues
        self.projection_ = (
            eigenvectors[:, :k] / np.sqrt(eigenvalues[:k] + self.epsilon)
        ).T
        self.n_features_in_ = n_features
        return self

    def transform(self, X):
        if not hasattr(self, "projection_"):
            raise NotFittedError("PCAWhitening instance is not fitted yet")
        X = check_matrix(X, n_features=self.n_features_in_, name="X")
        return (X - self.mean_) @ self.projection_.T

    @property
    def retained_dim_(self):
        return self.projection_.shape[0]
