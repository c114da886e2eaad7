"""Model container and the staged forward/backward driver shared by both toy nets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .layers import bce_with_logits, linear_backward, linear_forward, sigmoid

HEAD_PARAMS = ("head.w", "head.b")


class ShapeError(ValueError):
    pass


@dataclass
class Stage:
    """One named step of a network.

    ``forward(params, x) -> (y, cache)`` and
    ``backward(params, dy, cache) -> (dx, grads)``.
    """

    name: str
    forward: Callable[[dict, np.ndarray], tuple[np.ndarray, Any]]
    backward: Callable[[dict, np.ndarray, Any], tuple[np.ndarray, dict]]


@dataclass
class ModelParams:
    arch: str
    config: dict
    params: dict[str, np.ndarray]
    threshold: float = 0.5
    _stages: list[Stage] | None = field(default=None, repr=False, compare=False)

    @property
    def stages(self) -> list[Stage]:
        if self._stages is None:
            from . import registry

            self._stages = registry.build_stages(self.arch, self.config)
        return self._stages

    @property
    def input_size(self) -> int:
        return int(self.config["input_size"])

    @property
    def saliency_layer(self) -> str:
        return self.config["saliency_layer"]

    def head_names(self) -> list[str]:
        return [k for k in self.params if k in HEAD_PARAMS]

    def backbone_names(self) -> list[str]:
        return [k for k in self.params if k not in HEAD_PARAMS]

    def layer_names(self) -> list[str]:
        return [s.name for s in self.stages]

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, dict(self.config),
                           {k: v.copy() for k, v in self.params.items()}, self.threshold)


def pool_stage() -> Stage:
    def fwd(p, x):
        return x.mean(axis=(1, 2)), x.shape

    def bwd(p, dy, shape):
        n, h, w, _ = shape
        return np.broadcast_to(dy[:, None, None, :] / (h * w), shape).copy(), {}

    return Stage("pool", fwd, bwd)


def head_stage() -> Stage:
    def fwd(p, x):
        out, cache = linear_forward(x, p["head.w"][:, None], p["head.b"])
        return out[:, 0], cache

    def bwd(p, dy, cache):
        dx, dw, db = linear_backward(dy[:, None], cache)
        return dx, {"head.w": dw[:, 0], "head.b": db}

    return Stage("head", fwd, bwd)


def _as_batch(model: ModelParams, images) -> np.ndarray:
    x = np.asarray(images, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    s = model.input_size
    if x.ndim != 3 or x.shape[1:] != (s, s):
        raise ShapeError(f"expected images of shape (N, {s}, {s}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input pixels")
    return x


def run_forward(model: ModelParams, x: np.ndarray, keep: bool = False, start: str | None = None):
    """Run stages on a batch; ``start`` names the layer whose output ``x`` is.

    Returns ``(logits, caches, activations)``; caches are only kept if
    ``keep`` is set.
    """
    stages = model.stages
    i0 = 0
    if start is not None:
        names = [s.name for s in stages]
        if start not in names:
            raise KeyError(f"unknown layer {start!r}; known: {names}")
        i0 = names.index(start) + 1
    caches, acts = [], {}
    for st in stages[i0:]:
        x, cache = st.forward(model.params, x)
        acts[st.name] = x
        if keep:
            caches.append((st, cache))
    return x, caches, acts


def forward(model: ModelParams, images):
    """Sigmoid scores and per-layer activations.

    A single ``(H, W)`` image yields a float score; a batch yields an array.
    """
    single = np.ndim(images) == 2
    x = _as_batch(model, images)
    logits, _, acts = run_forward(model, x)
    scores = sigmoid(logits)
    if single:
        return float(scores[0]), {k: v[0] for k, v in acts.items()}
    return scores, acts


def logits(model: ModelParams, images) -> np.ndarray:
    return run_forward(model, _as_batch(model, images))[0]


def logits_from(model: ModelParams, layer: str, activation: np.ndarray) -> np.ndarray:
    """Finish the forward pass starting from ``layer``'s (batched) output."""
    return run_forward(model, activation, start=layer)[0]


def loss_and_grads(model: ModelParams, images, labels, freeze_backbone: bool = False):
    """Mean BCE loss and analytic gradients for every parameter.

    With ``freeze_backbone`` backpropagation stops at the head and all
    backbone gradients are exactly zero.
    """
    x = _as_batch(model, images)
    z, caches, _ = run_forward(model, x, keep=True)
    loss, dz = bce_with_logits(z, labels)
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    d = dz
    for st, cache in reversed(caches):
        d, g = st.backward(model.params, d, cache)
        for k, v in g.items():
            grads[k] += v
        if freeze_backbone and st.name == "head":
            break
    return loss, grads
