"""Grayscale image primitives: normalization, patch sampling, resizing.

Images are plain 2-D float64 arrays. Loaders scale pixels to [0, 1]; all
math here is double precision so results do not depend on file bit depth.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .validation import check_image


def normalize_zero_mean(image):
    """Subtract the mean intensity so the image averages to zero.

    Idempotent up to floating-point rounding; shape is preserved.
    """
    arr = check_image(image)
    return arr - arr.mean()


def extract_patches(image, patch_side, count, seed):
    """Sample square patches at uniformly random positions.

    Parameters
    ----------
    image : 2-D array
    patch_side : int
        Side length of each square patch.
    count : int
        Number of patches to draw (with replacement over positions).
    seed : int
        Seed for the position generator; identical inputs reproduce the
        same patches exactly.

    Returns
    -------
    ndarray of shape (count, patch_side**2)
        One patch per row, pixels vectorized row-major.
    """
    arr = check_image(image)
    h, w = arr.shape
    if patch_side < 1 or patch_side > h or patch_side > w:
        raise ValueError(
            f"patch_side {patch_side} does not fit a {h}x{w} image"
        )
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, h - patch_side + 1, size=count)
    cols = rng.integers(0, w - patch_side + 1, size=count)
    windows = sliding_window_view(arr, (patch_side, patch_side))
    return windows[rows, cols].reshape(count, patch_side * patch_side).copy()


def sample_patches(images, patch_side, count, seed):
    """Sample patches uniformly across a set of images.

    The image index and in-image position of every patch are drawn up
    front from one seeded generator, so the result does not depend on
    how the work is grouped per image.
    """
    images = [check_image(img, f"images[{i}]") for i, img in enumerate(images)]
    if not images:
        raise ValueError("images must be non-empty")
    for i, img in enumerate(images):
        h, w = img.shape
        if patch_side > h or patch_side > w:
            raise ValueError(
                f"patch_side {patch_side} does not fit images[{i}] of shape {h}x{w}"
            )
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    which = rng.integers(0, len(images), size=count)
    u_row = rng.random(count)
    u_col = rng.random(count)
    out = np.empty((count, patch_side * patch_side))
    for i, img in enumerate(images):
        mask = which == i
        if not mask.any():
            continue
        h, w = img.shape
        rows = (u_row[mask] * (h - patch_side + 1)).astype(np.intp)
        cols = (u_col[mask] * (w - patch_side + 1)).astype(np.intp)
        windows = sliding_window_view(img, (patch_side, patch_side))
        out[mask] = windows[rows, cols].reshape(-1, patch_side * patch_side)
    return out


def _box_weights(n_in, n_out):
    """Row-stochastic matrix averaging n_in source pixels into n_out cells.

    Output cell i covers the source interval [i*n_in/n_out, (i+1)*n_in/n_out);
    partially covered pixels contribute proportionally to their overlap.
    """
    scale = n_in / n_out
    weights = np.zeros((n_out, n_in))
    for i in range(n_out):
        start = i * scale
        stop = (i + 1) * scale
        j0 = int(np.floor(start))
        j1 = min(int(np.ceil(stop)), n_in)
        for j in range(j0, j1):
            overlap = min(stop, j + 1) - max(start, j)
            if overlap > 0:
                weights[i, j] = overlap / scale
    return weights


def resize_area(image, out_height, out_width):
    """Resize by box (area-average) resampling.

    Intended for downscaling; exact in double precision and fully
    deterministic. Returns the input unchanged (as float64) when the
    target size equals the source size.
    """
    arr = check_image(image)
    if out_height < 1 or out_width < 1:
        raise ValueError("output dimensions must be positive")
    h, w = arr.shape
    if (h, w) == (out_height, out_width):
        return arr.copy()
    return _box_weights(h, out_height) @ arr @ _box_weights(w, out_width).T
