"""Residual CNN baseline: strided stem, residual blocks, global pool, one logit."""

from __future__ import annotations

import numpy as np

from .base import Stage, head_stage, pool_stage
from .layers import conv_backward, conv_forward, glorot, relu_backward, relu_forward

DEFAULT_CONFIG = {
    "input_size": 64,
    "stem_width": 16,
    "stem_stride": 2,
    # (out_channels, stride) per residual block
    "blocks": [[16, 2], [32, 1], [32, 2], [32, 1]],
    "saliency_layer": "block4",
}


def _conv_init(rng, k, cin, cout):
    return glorot(rng, (k, k, cin, cout), k * k * cin, k * k * cout)


def init_params(config: dict, rng: np.random.Generator) -> dict:
    c = config["stem_width"]
    params = {"stem.w": _conv_init(rng, 3, 1, c), "stem.b": np.zeros(c)}
    for i, (cout, stride) in enumerate(config["blocks"], start=1):
        pre = f"block{i}."
        params[pre + "conv1.w"] = _conv_init(rng, 3, c, cout)
        params[pre + "conv1.b"] = np.zeros(cout)
        params[pre + "conv2.w"] = _conv_init(rng, 3, cout, cout)
        params[pre + "conv2.b"] = np.zeros(cout)
        if stride != 1 or cout != c:
            params[pre + "short.w"] = _conv_init(rng, 1, c, cout)
            params[pre + "short.b"] = np.zeros(cout)
        c = cout
    params["head.w"] = glorot(rng, (c,), c, 1)
    params["head.b"] = np.zeros(1)
    return params


def _stem_fwd(prm, x, stride):
    z, c_conv = conv_forward(x[..., None], prm["stem.w"], prm["stem.b"], stride)
    y, mask = relu_forward(z)
    return y, (c_conv, mask)


def _stem_bwd(prm, dy, cache):
    c_conv, mask = cache
    _, dw, db = conv_backward(relu_backward(dy, mask), c_conv)
    return None, {"stem.w": dw, "stem.b": db}


def _res_fwd(prm, x, pre, stride):
    z1, c1 = conv_forward(x, prm[pre + "conv1.w"], prm[pre + "conv1.b"], stride)
    h, m1 = relu_forward(z1)
    z2, c2 = conv_forward(h, prm[pre + "conv2.w"], prm[pre + "conv2.b"], 1)
    if pre + "short.w" in prm:
        s, cs = conv_forward(x, prm[pre + "short.w"], prm[pre + "short.b"], stride)
    else:
        s, cs = x, None
    y, m2 = relu_forward(s + z2)
    return y, (c1, m1, c2, cs, m2)


def _res_bwd(prm, dy, cache, pre):
    c1, m1, c2, cs, m2 = cache
    g = {}
    dsum = relu_backward(dy, m2)
    dh, g[pre + "conv2.w"], g[pre + "conv2.b"] = conv_backward(dsum, c2)
    dx, g[pre + "conv1.w"], g[pre + "conv1.b"] = conv_backward(relu_backward(dh, m1), c1)
    if cs is None:
        dx = dx + dsum
    else:
        dxs, g[pre + "short.w"], g[pre + "short.b"] = conv_backward(dsum, cs)
        dx = dx + dxs
    return dx, g


def build_stages(config: dict) -> list[Stage]:
    stride0 = config["stem_stride"]
    stages = [Stage("stem", lambda prm, x: _stem_fwd(prm, x, stride0), _stem_bwd)]
    for i, (_, stride) in enumerate(config["blocks"], start=1):
        pre = f"block{i}."
        stages.append(Stage(
            f"block{i}",
            lambda prm, x, pre=pre, stride=stride: _res_fwd(prm, x, pre, stride),
            lambda prm, dy, c, pre=pre: _res_bwd(prm, dy, c, pre),
        ))
    stages += [pool_stage(), head_stage()]
    return stages
