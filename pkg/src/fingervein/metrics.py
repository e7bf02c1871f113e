"""Verification metrics: ROC curves, equal error rate, area under curve.

Scores follow the higher-is-more-genuine convention and a trial counts
as accepted when its score is >= the threshold. The ROC sweep visits
every distinct score value plus sentinels at both infinities, so the
curve always starts at (0, 0) and ends at (1, 1).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RocCurve:
    """Operating points ordered by increasing false accept rate.

    ``far`` and ``tar`` are the false-accept and true-accept rates at
    each swept threshold (stored in ``thresholds``, descending from
    +inf to -inf). Both rate arrays are non-decreasing.
    """

    far: np.ndarray
    tar: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        far = np.asarray(self.far, dtype=np.float64)
        tar = np.asarray(self.tar, dtype=np.float64)
        thresholds = np.asarray(self.thresholds, dtype=np.float64)
        object.__setattr__(self, "far", far)
        object.__setattr__(self, "tar", tar)
        object.__setattr__(self, "thresholds", thresholds)
        if not (far.shape == tar.shape == thresholds.shape) or far.ndim != 1:
            raise ValueError("far, tar and thresholds must be matching 1-D arrays")
        if far.size < 2 or far[0] != 0.0 or tar[0] != 0.0 or far[-1] != 1.0 or tar[-1] != 1.0:
            raise ValueError("curve must run from (0, 0) to (1, 1)")
        if np.any(np.diff(far) < 0) or np.any(np.diff(tar) < 0):
            raise ValueError("far and tar must be non-decreasing")


def roc(genuine_scores, impostor_scores):
    """Build the ROC curve from genuine and impostor score lists."""
    genuine = np.sort(np.asarray(genuine_scores, dtype=np.float64))
    impostor = np.sort(np.asarray(impostor_scores, dtype=np.float64))
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("genuine and impostor score lists must be non-empty")
    values = np.unique(np.concatenate([genuine, impostor]))[::-1]
    thresholds = np.concatenate([[np.inf], values, [-np.inf]])
    far = np.empty(thresholds.size)
    tar = np.empty(thresholds.size)
    far[0], tar[0] = 0.0, 0.0
    far[-1], tar[-1] = 1.0, 1.0
    far[1:-1] = (
        impostor.size - np.searchsorted(impostor, values, side="left")
    ) / impostor.size
    tar[1:-1] = (
        genuine.size - np.searchsorted(genuine, values, side="left")
    ) / genuine.size
    return RocCurve(far=far, tar=tar, thresholds=thresholds)


def eer(curve):
    """Equal error rate: where FAR meets FRR = 1 - TAR.

    The crossing rarely falls on a swept point, so it is located by
    linear interpolation between the bracketing operating points.
    """
    far = curve.far
    frr = 1.0 - curve.tar
    diff = far - frr
    # diff is non-decreasing from -1 at (0,0) to +1 at (1,1).
    i = int(np.argmax(diff >= 0.0))
    if diff[i] == 0.0:
        return float(far[i])
    j = i - 1
    t = -diff[j] / (diff[i] - diff[j])
    far_at = far[j] + t * (far[i] - far[j])
    frr_at = frr[j] + t * (frr[i] - frr[j])
    return float(0.5 * (far_at + frr_at))


def auc(curve):
    """Trapezoidal area under the ROC curve.

    Equals the probability that a random genuine score exceeds a random
    impostor score, counting ties as one half.
    """
    return float(np.sum(np.diff(curve.far) * (curve.tar[1:] + curve.tar[:-1])) / 2.0)
