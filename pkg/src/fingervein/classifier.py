"""Per-user one-class Gaussian models and verification thresholds.

Enrollment sets are tiny (a few vectors) while features run to
thousands of dimensions, so a full covariance is singular. The model
therefore uses a regularized diagonal covariance: per-dimension sample
variances shrunk toward their mean, plus a ridge. Scores are Gaussian
log-densities up to the constant term, so higher means more target-like.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .validation import NumericError, check_finite, check_matrix

THRESHOLD_KINDS = ("global", "per_user")
THRESHOLD_TARGETS = ("eer_point", "fixed_far")


@dataclass(frozen=True)
class ThresholdStrategy:
    """How decision thresholds are calibrated.

    ``kind`` picks the scoping: one pooled threshold for all users or
    one per user (the caller scopes the score lists accordingly).
    ``target`` picks the operating point: the FAR/FRR crossing or the
    smallest threshold with FAR at or below ``fixed_far_value``.
    """

    kind: str = "global"
    target: str = "eer_point"
    fixed_far_value: float = None

    def __post_init__(self):
        if self.kind not in THRESHOLD_KINDS:
            raise ValueError(f"kind must be one of {THRESHOLD_KINDS}")
        if self.target not in THRESHOLD_TARGETS:
            raise ValueError(f"target must be one of {THRESHOLD_TARGETS}")
        if self.target == "fixed_far":
            if self.fixed_far_value is None or not 0.0 < self.fixed_far_value < 1.0:
                raise ValueError(
                    "fixed_far_value in (0, 1) is required when target='fixed_far'"
                )


class OneClassGaussian(BaseEstimator):
    """One-class Gaussian over feature vectors.

    The regularized covariance is diagonal:

    ``var = (1 - shrinkage) * s2 + shrinkage * mean(s2) + regularizer``

    with ``s2`` the per-dimension unbiased sample variances. The blend
    keeps per-dimension structure where the few enrollment samples
    support it, the ridge keeps the matrix positive definite even when
    all samples coincide (then the covariance is exactly
    ``regularizer * I``).

    Attributes
    ----------
    mean_ : ndarray of shape (dim,)
    variance_ : ndarray of shape (dim,)
        Diagonal of the regularized covariance.
    log_det_ : float
    threshold_ : float or None
        Decision boundary in score space; set via :meth:`set_threshold`.
    """

    def __init__(self, shrinkage=0.5, regularizer=1e-3):
        self.shrinkage = shrinkage
        self.regularizer = regularizer

    def fit(self, X, y=None):
        X = check_matrix(X, name="X")
        check_finite(X, "X")
        if not 0.0 <= self.shrinkage <= 1.0:
            raise ValueError(f"shrinkage must lie in [0, 1], got {self.shrinkage}")
        if self.regularizer <= 0:
            raise ValueError(f"regularizer must be positive, got {self.regularizer}")
        if X.shape[0] < 2:
            raise ValueError(
                f"need at least 2 target vectors to fit, got {X.shape[0]}"
            )
        s2 = X.var(axis=0, ddof=1)
        variance = (
            (1.0 - self.shrinkage) * s2
            + self.shrinkage * s2.mean()
            + self.regularizer
        )
        if variance.min() <= 0.0 or not np.all(np.isfinite(variance)):
            raise NumericError("regularized covariance is not positive definite")
        self.mean_ = X.mean(axis=0)
        self.variance_ = variance
        self.log_det_ = float(np.sum(np.log(variance)))
        self.threshold_ = None
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "mean_"):
            raise NotFittedError("OneClassGaussian instance is not fitted yet")

    def score_samples(self, X):
        """Gaussian log-density up to the constant: -mahalanobis/2 - log_det/2."""
        self._check_fitted()
        X = check_matrix(X, n_features=self.n_features_in_, name="X")
        diff = X - self.mean_
        mahalanobis = np.sum(diff * diff / self.variance_, axis=1)
        return -0.5 * mahalanobis - 0.5 * self.log_det_

    def set_threshold(self, threshold):
        self._check_fitted()
        self.threshold_ = float(threshold)
        return self

    def predict(self, X):
        """Accept (True) iff score >= threshold. Threshold must be set."""
        self._check_fitted()
        if self.threshold_ is None:
            raise RuntimeError(
                "decision threshold is not set; call set_threshold first"
            )
        return self.score_samples(X) >= self.threshold_

    def verify(self, x):
        """Single-vector decision: returns (accepted, score)."""
        accepted = self.predict(np.atleast_2d(x))
        score = self.score_samples(np.atleast_2d(x))
        return bool(accepted[0]), float(score[0])


def _error_segments(genuine, impostor):
    """Piecewise-constant FAR/FRR over threshold segments.

    With the accept rule ``score >= t``, FAR and FRR are constant on
    ``(v[j-1], v[j]]`` for consecutive distinct score values. Returns
    (lows, highs, far, frr) arrays covering (-inf, v0], the interior
    segments and (vn, +inf); the unbounded ends are represented with a
    unit margin for midpoint purposes.
    """
    genuine = np.sort(np.asarray(genuine, dtype=np.float64))
    impostor = np.sort(np.asarray(impostor, dtype=np.float64))
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("genuine and impostor score lists must be non-empty")
    values = np.unique(np.concatenate([genuine, impostor]))
    lows = np.concatenate([[values[0] - 1.0], values])
    highs = np.concatenate([values, [values[-1] + 1.0]])
    # Segment j is (lows[j], highs[j]]; accept threshold t in that segment
    # rejects genuine scores <= lows[j] and accepts impostor scores >= highs[j]
    # (for the final open segment nothing is accepted).
    far = np.empty(values.size + 1)
    frr = np.empty(values.size + 1)
    far[:-1] = (
        impostor.size - np.searchsorted(impostor, values, side="left")
    ) / impostor.size
    far[-1] = 0.0
    frr[0] = 0.0
    frr[1:] = np.searchsorted(genuine, values, side="right") / genuine.size
    return lows, highs, far, frr


def select_threshold(genuine_scores, impostor_scores, strategy):
    """Calibrate a decision threshold from labeled score lists.

    ``eer_point`` returns the midpoint of the threshold interval where
    |FAR - FRR| is minimal (the crossing of the two error curves).
    ``fixed_far`` returns the smallest candidate threshold whose
    empirical FAR is at or below ``strategy.fixed_far_value``;
    candidates are the observed score values plus one point above the
    maximum.
    """
    lows, highs, far, frr = _error_segments(genuine_scores, impostor_scores)
    if strategy.target == "eer_point":
        gap = np.abs(far - frr)
        minimum = gap.min()
        matches = np.flatnonzero(gap == minimum)
        # FAR - FRR is non-increasing, so minimizing segments are
        # contiguous; merge them into one interval.
        return float((lows[matches[0]] + highs[matches[-1]]) / 2.0)
    qualifying = np.flatnonzero(far <= strategy.fixed_far_value)
    j = qualifying[0]
    if j == far.size - 1:
        # Only the open segment above every score qualifies.
        return float(np.nextafter(highs[-2], np.inf))
    return float(highs[j])
