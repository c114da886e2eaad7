"""Synthetic chest-film stand-in with planted bright opacities.

Negatives are a smooth low-frequency "lung field" texture.  Positives add one
dominant soft elliptical blob (plus up to two fainter, smaller ones); the
bounding box of the dominant blob is the ground-truth region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

BOX_HALF_WIDTH = 1.5  # bounding box half-extent, in blob sigmas
MIN_BOX_CONTRAST = 0.1
TEXTURE_AMPLITUDE = 0.05
LUNG_CONTRAST = 0.04
PRIMARY_SIGMA = (0.11, 0.15)  # fractions of the image extent
SECONDARY_SIGMA = (0.06, 0.1)
PRIMARY_CONTRAST = (0.35, 0.6)


@dataclass
class Sample:
    id: str
    pixels: np.ndarray
    label: int
    blob_box: tuple[int, int, int, int] | None = None  # (row, col, height, width)


def _texture(rng, size):
    yy, xx = np.mgrid[0:size, 0:size] / size
    lungs = sum(np.exp(-(((yy - 0.5) / 0.3) ** 2 + ((xx - cx) / 0.15) ** 2) ** 2) for cx in (0.3, 0.7))
    noise = gaussian_filter(rng.standard_normal((size, size)), sigma=size / 16, mode="wrap")
    noise /= noise.std()
    return 0.4 - LUNG_CONTRAST * lungs + TEXTURE_AMPLITUDE * noise


def _blob(size, cr, cc, sr, sc, contrast):
    yy, xx = np.mgrid[0:size, 0:size]
    return contrast * np.exp(-0.5 * (((yy - cr) / sr) ** 2 + ((xx - cc) / sc) ** 2))


def _box(size, cr, cc, sr, sc):
    r0 = max(0, int(np.floor(cr - BOX_HALF_WIDTH * sr)))
    c0 = max(0, int(np.floor(cc - BOX_HALF_WIDTH * sc)))
    r1 = min(size, int(np.ceil(cr + BOX_HALF_WIDTH * sr)) + 1)
    c1 = min(size, int(np.ceil(cc + BOX_HALF_WIDTH * sc)) + 1)
    return r0, c0, r1 - r0, c1 - c0


def box_contrast(pixels: np.ndarray, box) -> float:
    """Mean intensity inside ``box`` minus mean intensity outside it."""
    r, c, h, w = box
    inside = np.zeros(pixels.shape, dtype=bool)
    inside[r:r + h, c:c + w] = True
    return float(pixels[inside].mean() - pixels[~inside].mean())


def _quantize(x):
    # 8-bit grid so PGM round trips are exact
    return np.round(np.clip(x, 0.0, 1.0) * 255.0) / 255.0


def _positive(rng, size):
    lo, hi = 0.25 * size, 0.75 * size
    while True:
        base = _texture(rng, size)
        cr, cc = rng.uniform(lo, hi, size=2)
        sr, sc = rng.uniform(PRIMARY_SIGMA[0] * size, PRIMARY_SIGMA[1] * size, size=2)
        contrast = rng.uniform(*PRIMARY_CONTRAST)
        img = base + _blob(size, cr, cc, sr, sc, contrast)
        for _ in range(rng.integers(0, 3)):
            r2, c2 = rng.uniform(lo, hi, size=2)
            s2r, s2c = rng.uniform(SECONDARY_SIGMA[0] * size, SECONDARY_SIGMA[1] * size, size=2)
            img += _blob(size, r2, c2, s2r, s2c, rng.uniform(0.25, 0.75 * contrast))
        img = _quantize(img)
        box = _box(size, cr, cc, sr, sc)
        if box_contrast(img, box) >= MIN_BOX_CONTRAST:
            return img, box


def generate_dataset(n: int, size: int = 64, pos_fraction: float = 0.5, seed: int = 0,
                     prefix: str = "s") -> list[Sample]:
    """``n`` samples, exactly ``round(n * pos_fraction)`` of them positive."""
    if not 0.0 < pos_fraction < 1.0:
        raise ValueError(f"pos_fraction must lie in (0, 1), got {pos_fraction}")
    if size < 32:
        raise ValueError(f"size must be at least 32, got {size}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * pos_fraction))
    labels = rng.permutation(np.r_[np.ones(n_pos, int), np.zeros(n - n_pos, int)])
    out = []
    for i, y in enumerate(labels):
        sid = f"{prefix}{i:05d}"
        if y:
            img, box = _positive(rng, size)
            out.append(Sample(sid, img, 1, box))
        else:
            out.append(Sample(sid, _quantize(_texture(rng, size)), 0, None))
    return out
