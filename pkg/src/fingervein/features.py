"""Image-level features: convolve learned kernels, then mean-pool.

The whitening transform is folded into the autoencoder's first-layer
weights once, so convolving an image with the effective kernels gives
exactly the hidden activation the autoencoder would produce on each
whitened window, without whitening every window explicitly.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin

from .autoencoder import sigmoid
from .validation import check_finite, check_image

# Kernels are applied in blocks to bound the im2col intermediate when
# the bank is large.
_KERNEL_CHUNK = 512


@dataclass(frozen=True)
class FeatureBank:
    """Convolution kernels with whitening baked in.

    ``kernels`` has shape (kernel_count, patch_side, patch_side) with
    row-major window orientation; ``biases`` has shape (kernel_count,).
    For any patch ``p``: sigmoid(sum(kernels[k] * p) + biases[k]) equals
    the autoencoder hidden activation of the whitened patch.
    """

    kernels: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        kernels = np.asarray(self.kernels, dtype=np.float64)
        biases = np.asarray(self.biases, dtype=np.float64)
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "biases", biases)
        if kernels.ndim != 3 or kernels.shape[1] != kernels.shape[2]:
            raise ValueError(
                f"kernels must be (count, side, side), got {kernels.shape}"
            )
        if biases.shape != (kernels.shape[0],):
            raise ValueError(
                f"biases shape {biases.shape} does not match {kernels.shape[0]} kernels"
            )
        check_finite(kernels, "kernels")
        check_finite(biases, "biases")

    @property
    def kernel_count(self):
        return self.kernels.shape[0]

    @property
    def patch_side(self):
        return self.kernels.shape[1]


def build_feature_bank(params, whitening, patch_side):
    """Compose first-layer weights with a fitted whitening transform.

    ``params.input_dim`` must equal the whitening output dimension, and
    the whitening input dimension must equal ``patch_side ** 2``.
    """
    projection = whitening.projection_
    mean = whitening.mean_
    if params.input_dim != projection.shape[0]:
        raise ValueError(
            f"autoencoder input_dim {params.input_dim} != whitening "
            f"output dim {projection.shape[0]}"
        )
    if projection.shape[1] != patch_side * patch_side:
        raise ValueError(
            f"whitening input dim {projection.shape[1]} != patch_side**2 "
            f"({patch_side * patch_side})"
        )
    composed = params.W1 @ projection
    kernels = composed.reshape(-1, patch_side, patch_side)
    biases = params.b1 - composed @ mean
    return FeatureBank(kernels=kernels, biases=biases)


def convolve_features(image, bank):
    """Valid cross-correlation of every kernel, through the sigmoid.

    ``response[k, r, c]`` is the bank activation of the window whose
    top-left corner is (r, c); windows are read row-major, matching the
    patch vectorization, and no kernel flip is applied.

    Returns
    -------
    ndarray of shape (kernel_count, H - side + 1, W - side + 1)
    """
    arr = check_image(image)
    side = bank.patch_side
    h, w = arr.shape
    if h < side or w < side:
        raise ValueError(
            f"image {h}x{w} is smaller than the {side}x{side} kernels"
        )
    windows = sliding_window_view(arr, (side, side))
    out_h, out_w = windows.shape[0], windows.shape[1]
    columns = windows.reshape(out_h * out_w, side * side)
    flat_kernels = bank.kernels.reshape(bank.kernel_count, side * side)
    responses = np.empty((bank.kernel_count, out_h, out_w))
    for start in range(0, bank.kernel_count, _KERNEL_CHUNK):
        stop = min(start + _KERNEL_CHUNK, bank.kernel_count)
        block = columns @ flat_kernels[start:stop].T + bank.biases[start:stop]
        responses[start:stop] = sigmoid(block).T.reshape(stop - start, out_h, out_w)
    return responses


def _cell_bounds(size, parts):
    # Floor split: trailing cells absorb the remainder pixels.
    return [size * i // parts for i in range(parts + 1)]


def mean_pool(responses, pool_rows, pool_cols):
    """Average each response map over a pool_rows x pool_cols grid.

    The map is split into near-equal rectangular cells with boundaries
    ``floor(i * size / parts)``, so any remainder pixels land in the
    trailing cells. Output is one flat vector, kernel-major, then
    row-major over pool cells.
    """
    responses = np.asarray(responses, dtype=np.float64)
    if responses.ndim != 3:
        raise ValueError(f"responses must be 3-D, got shape {responses.shape}")
    n_kernels, h, w = responses.shape
    if pool_rows < 1 or pool_cols < 1 or pool_rows > h or pool_cols > w:
        raise ValueError(
            f"pool grid {pool_rows}x{pool_cols} does not fit {h}x{w} response maps"
        )
    row_bounds = _cell_bounds(h, pool_rows)
    col_bounds = _cell_bounds(w, pool_cols)
    pooled = np.empty((n_kernels, pool_rows, pool_cols))
    for i in range(pool_rows):
        for j in range(pool_cols):
            cell = responses[
                :, row_bounds[i]:row_bounds[i + 1], col_bounds[j]:col_bounds[j + 1]
            ]
            pooled[:, i, j] = cell.mean(axis=(1, 2))
    return pooled.reshape(-1)


def represent(image, bank, pool_rows, pool_cols):
    """Image to pooled feature vector; the single representation entry point."""
    return mean_pool(convolve_features(image, bank), pool_rows, pool_cols)


def save_features_text(path, vectors):
    """Write feature vectors as text: one vector per line, values
    space-separated with full round-trip precision."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as handle:
        for row in vectors:
            handle.write(" ".join(repr(v) for v in row.tolist()) + "\n")
    return vectors.shape[0]


def load_features_text(path):
    """Read vectors written by :func:`save_features_text`."""
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split()])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed feature line")
    if not rows:
        raise ValueError(f"{path}: no feature vectors found")
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError(f"{path}: inconsistent vector lengths {sorted(lengths)}")
    return np.array(rows)


class ConvolutionalFeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer turning images into pooled feature vectors."""

    def __init__(self, bank=None, pool_rows=4, pool_cols=4):
        self.bank = bank
        self.pool_rows = pool_rows
        self.pool_cols = pool_cols

    @classmethod
    def from_autoencoder(cls, params, whitening, patch_side, pool_rows=4, pool_cols=4):
        bank = build_feature_bank(params, whitening, patch_side)
        return cls(bank=bank, pool_rows=pool_rows, pool_cols=pool_cols)

    def fit(self, X=None, y=None):
        if self.bank is None:
            raise ValueError("extractor needs a FeatureBank")
        return self

    def transform(self, X):
        if self.bank is None:
            raise ValueError("extractor needs a FeatureBank")
        return np.array(
            [represent(img, self.bank, self.pool_rows, self.pool_cols) for img in X]
        )

    @property
    def n_output_features_(self):
        return self.bank.kernel_count * self.pool_rows * self.pool_cols
