"""Ablation-CAM localization maps for both toy architectures.

Each channel of a feature stack is zeroed in turn and the rest of the network
re-run from that layer; the relative drop of the positive-class logit is the
channel's weight.  The map is the rectified weighted sum of channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models.base import ModelParams, ShapeError, forward, logits, logits_from
from .resample import bilinear

EPS = 1e-8

# blue -> green -> yellow -> red at 0, 1/3, 2/3, 1
RAMP_ANCHORS = np.array([[0, 0, 255], [0, 255, 0], [255, 255, 0], [255, 0, 0]], dtype=np.float64)


@dataclass
class SaliencyMap:
    grid: np.ndarray
    source_layer: str
    input_size: tuple[int, int]

    def upsampled(self) -> np.ndarray:
        return upsample_bilinear(self.grid, *self.input_size)


def _layer_activation(model: ModelParams, image, layer: str):
    _, acts = forward(model, image)
    if layer not in acts:
        raise KeyError(f"unknown layer {layer!r}; known: {sorted(acts)}")
    a = acts[layer]
    if a.ndim != 3:
        raise ValueError(f"layer {layer!r} is not a spatial feature stack (shape {a.shape})")
    return a


def ablation_weights(model: ModelParams, image, layer: str | None = None) -> np.ndarray:
    """Per-channel weights ``(y - y_k) / (|y| + eps)`` on the positive logit.

    ``image`` is a preprocessed model input of shape (H, W).  Each ablation is
    an independent forward pass; the model is never modified.
    """
    layer = layer or model.saliency_layer
    a = _layer_activation(model, image, layer)
    y = float(logits(model, image)[0])
    w = np.empty(a.shape[-1])
    for k in range(a.shape[-1]):
        ablated = a.copy()
        ablated[..., k] = 0.0
        w[k] = (y - float(logits_from(model, layer, ablated[None])[0])) / (abs(y) + EPS)
    return w


def weighted_map(activations: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Rectified channel-weighted sum, accumulated in channel order."""
    a = np.asarray(activations, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if a.shape[-1] != w.shape[0]:
        raise ShapeError(f"{a.shape[-1]} channels but {w.shape[0]} weights")
    acc = np.zeros(a.shape[:-1])
    for k in range(w.shape[0]):
        acc += w[k] * a[..., k]
    return np.maximum(acc, 0.0)


def ablation_cam(model: ModelParams, image, layer: str | None = None) -> SaliencyMap:
    layer = layer or model.saliency_layer
    a = _layer_activation(model, image, layer)
    w = ablation_weights(model, image, layer)
    s = model.input_size
    return SaliencyMap(weighted_map(a, w), layer, (s, s))


def upsample_bilinear(grid, height: int, width: int) -> np.ndarray:
    return bilinear(grid, height, width)


def normalize_map(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    m = g.max()
    return g / m if m > 0 else np.zeros_like(g)


def color_ramp(values) -> np.ndarray:
    """Map [0, 1] values onto the 4-anchor ramp; returns float RGB in [0, 255]."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * (len(RAMP_ANCHORS) - 1)
    lo = np.minimum(np.floor(v).astype(int), len(RAMP_ANCHORS) - 2)
    f = (v - lo)[..., None]
    return RAMP_ANCHORS[lo] * (1 - f) + RAMP_ANCHORS[lo + 1] * f


def render_overlay(image, saliency) -> np.ndarray:
    """Blend a [0, 1] grayscale image 50/50 with the colored, max-normalized map."""
    img = np.asarray(image, dtype=np.float64)
    grid = saliency.grid if isinstance(saliency, SaliencyMap) else np.asarray(saliency, dtype=np.float64)
    if grid.shape != img.shape:
        raise ShapeError(f"map shape {grid.shape} does not match image shape {img.shape}")
    gray = np.clip(img, 0.0, 1.0)[..., None] * 255.0
    rgb = 0.5 * gray + 0.5 * color_ramp(normalize_map(grid))
    return np.round(rgb).astype(np.uint8)


def pointing_hit(upsampled: np.ndarray, box) -> bool:
    """Whether the map's (first) argmax falls inside ``(row, col, h, w)``."""
    r, c = np.unravel_index(int(np.argmax(upsampled)), upsampled.shape)
    br, bc, bh, bw = box
    return br <= r < br + bh and bc <= c < bc + bw
