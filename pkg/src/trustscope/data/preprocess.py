from __future__ import annotations

import numpy as np

from ..resample import bilinear


def resize_center_crop(pixels: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize so the short side equals ``size``, then center-crop."""
    h, w = pixels.shape
    if h < 1 or w < 1:
        raise ValueError(f"degenerate image extents {h}x{w}")
    if (h, w) == (size, size):
        return pixels
    scale = size / min(h, w)
    nh, nw = max(size, int(round(h * scale))), max(size, int(round(w * scale)))
    big = bilinear(pixels, nh, nw)
    r0, c0 = (nh - size) // 2, (nw - size) // 2
    return big[r0:r0 + size, c0:c0 + size]


def standardize(x: np.ndarray) -> np.ndarray:
    x = x - x.mean()
    sd = x.std()
    return x / sd if sd > 0 else x


def hflip(x: np.ndarray) -> np.ndarray:
    return x[:, ::-1].copy()


def preprocess(sample, training: bool = False, flip_prob: float = 0.5,
               rng: np.random.Generator | None = None, size: int = 64) -> np.ndarray:
    """Resize/crop to a ``size`` square, standardize per image, maybe flip.

    Random horizontal flipping is the only augmentation and only applies when
    ``training``; exactly one draw is taken from ``rng`` per training call.
    """
    pixels = getattr(sample, "pixels", sample)
    x = np.asarray(pixels, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("image contains non-finite values")
    x = standardize(resize_center_crop(x, size))
    if training:
        if rng is None:
            raise ValueError("training preprocessing needs an rng")
        if rng.random() < flip_prob:
            x = hflip(x)
    return x
