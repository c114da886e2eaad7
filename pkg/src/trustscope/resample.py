"""Corner-aligned bilinear resampling shared by preprocessing and saliency."""

from __future__ import annotations

import numpy as np


def _axis_weights(n_in: int, n_out: int):
    if n_out == 1 or n_in == 1:
        pos = np.zeros(n_out)
    else:
        pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    lo = np.minimum(np.floor(pos).astype(int), n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    return lo, hi, frac


def bilinear(grid, height: int, width: int) -> np.ndarray:
    """Resize a 2-D grid with corner-aligned bilinear interpolation.

    The first and last samples of each axis map onto the first and last
    output pixels, so a constant grid stays constant and values never leave
    the input range.
    """
    a = np.asarray(grid, dtype=np.float64)
    if a.ndim != 2 or min(a.shape) < 1:
        raise ValueError(f"expected a non-empty 2-D grid, got shape {a.shape}")
    if height < 1 or width < 1:
        raise ValueError(f"target extents must be positive, got {height}x{width}")
    r0, r1, fr = _axis_weights(a.shape[0], height)
    c0, c1, fc = _axis_weights(a.shape[1], width)
    rows = a[r0] * (1 - fr)[:, None] + a[r1] * fr[:, None]
    out = rows[:, c0] * (1 - fc) + rows[:, c1] * fc
    return out
