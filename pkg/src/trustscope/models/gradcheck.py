"""Finite-difference check of the hand-written backward passes."""

from __future__ import annotations

import numpy as np

from .base import ModelParams, _as_batch, loss_and_grads, run_forward
from .layers import bce_with_logits


def _loss(model, x, y):
    z = run_forward(model, _as_batch(model, x))[0]
    return bce_with_logits(z, y)[0]


def relative_error(a, n, floor: float = 1e-6):
    """``|a - n| / (|a| + |n|)``, with the denominator floored at ``floor``."""
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)


def grad_check(model: ModelParams, image, label, n_coords: int = 200, step: float = 1e-5,
               seed: int = 0, freeze_backbone: bool = False) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``n_coords`` coordinates are drawn without replacement across all
    parameters (every coordinate if the model is smaller).
    """
    x = np.asarray(image, dtype=np.float64)
    y = np.atleast_1d(np.asarray(label, dtype=np.float64))
    _, grads = loss_and_grads(model, x, y, freeze_backbone=freeze_backbone)

    names = list(model.params)
    sizes = np.array([model.params[k].size for k in names])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(total, size=min(n_coords, total), replace=False))
    offsets = np.concatenate(([0], np.cumsum(sizes)))

    probe = model.copy()
    worst = 0.0
    for flat in picks:
        i = int(np.searchsorted(offsets, flat, side="right") - 1)
        name, j = names[i], int(flat - offsets[i])
        if freeze_backbone and name in model.backbone_names():
            # frozen coordinates must carry no analytic gradient at all
            err = abs(grads[name].flat[j])
        else:
            arr = probe.params[name]
            orig = arr.flat[j]
            arr.flat[j] = orig + step
            lp = _loss(probe, x, y)
            arr.flat[j] = orig - step
            lm = _loss(probe, x, y)
            arr.flat[j] = orig
            num = (lp - lm) / (2 * step)
            err = float(relative_error(grads[name].flat[j], num))
        worst = max(worst, err)
    return worst
