"""Shifted-window attention classifier at toy scale.

Layout: patch embedding -> stage 1 blocks (shift 0, then window/2) -> patch
merge -> stage 2 blocks -> global average pool -> single-logit head.
Shifted windows use a plain cyclic roll with no cross-boundary mask.

Blocks carry no LayerNorm.  Inputs are standardized per image, and a
per-token normalization erases the brightness contrast that marks a lesion,
leaving the network to classify from background statistics instead.
"""

from __future__ import annotations

import numpy as np

from .base import ShapeError, Stage, head_stage, pool_stage
from .layers import (
    gelu_backward,
    gelu_forward,
    glorot,
    linear_backward,
    linear_forward,
    softmax,
    softmax_backward,
)

DEFAULT_CONFIG = {
    "input_size": 64,
    "patch": 4,
    "dim": 16,
    "depths": [2, 2],
    "heads": [2, 4],
    "window": 2,
    "mlp_ratio": 4,
    "saliency_layer": "stage2.1",
}


def _sub(params: dict, prefix: str) -> dict:
    n = len(prefix)
    return {k[n:]: v for k, v in params.items() if k.startswith(prefix)}


def _pre(grads: dict, prefix: str) -> dict:
    return {prefix + k: v for k, v in grads.items()}


# -- patch embedding ----------------------------------------------------------

def _patchify(x, p):
    n, h, w = x.shape
    if h % p or w % p:
        raise ShapeError(f"image {h}x{w} not divisible by patch {p}")
    return x.reshape(n, h // p, p, w // p, p).transpose(0, 1, 3, 2, 4).reshape(n, h // p, w // p, p * p)


def _embed_fwd(prm, x, patch):
    cols = _patchify(x, patch)
    out, cache = linear_forward(cols, prm["w"], prm["b"])
    if out.shape[1:3] != prm["pos"].shape[:2]:
        raise ShapeError(f"token grid {out.shape[1:3]} does not match positional table {prm['pos'].shape[:2]}")
    return out + prm["pos"], cache


def _embed_bwd(dout, cache):
    _, dw, db = linear_backward(dout, cache)
    return {"w": dw, "b": db, "pos": dout.sum(axis=0)}


def patch_embed(image, patch: int, params: dict) -> np.ndarray:
    """Project non-overlapping ``patch x patch`` tiles and add positions.

    ``params`` holds ``w`` (patch*patch, dim), ``b`` (dim,) and ``pos``
    (H/patch, W/patch, dim).  Accepts a single (H, W) image or a batch.
    """
    x = np.asarray(image, dtype=np.float64)
    single = x.ndim == 2
    out, _ = _embed_fwd(params, x[None] if single else x, patch)
    return out[0] if single else out


# -- window attention block ---------------------------------------------------

def _partition(x, w):
    n, g, _, d = x.shape
    m = g // w
    return x.reshape(n, m, w, m, w, d).transpose(0, 1, 3, 2, 4, 5).reshape(n * m * m, w * w, d)


def _unpartition(xw, n, g, w):
    m = g // w
    d = xw.shape[-1]
    return xw.reshape(n, m, m, w, w, d).transpose(0, 1, 3, 2, 4, 5).reshape(n, g, g, d)


def _attn_fwd(prm, h, window, shift, heads):
    n, g, _, d = h.shape
    if shift:
        h = np.roll(h, (-shift, -shift), axis=(1, 2))
    hw = _partition(h, window)
    b, t, _ = hw.shape
    dh = d // heads
    qkv, c_qkv = linear_forward(hw, prm["qkv.w"], prm["qkv.b"])
    qkv = qkv.reshape(b, t, 3, heads, dh).transpose(2, 0, 3, 1, 4)
    q, k, v = qkv[0], qkv[1], qkv[2]
    scale = dh**-0.5
    att = softmax(q @ k.transpose(0, 1, 3, 2) * scale)
    o = (att @ v).transpose(0, 2, 1, 3).reshape(b, t, d)
    y, c_proj = linear_forward(o, prm["proj.w"], prm["proj.b"])
    y = _unpartition(y, n, g, window)
    if shift:
        y = np.roll(y, (shift, shift), axis=(1, 2))
    return y, (c_qkv, q, k, v, att, c_proj, scale, n, g, window, shift, heads)


def _attn_bwd(dy, cache):
    c_qkv, q, k, v, att, c_proj, scale, n, g, window, shift, heads = cache
    if shift:
        dy = np.roll(dy, (-shift, -shift), axis=(1, 2))
    dyw = _partition(dy, window)
    b, t, d = dyw.shape
    do, dpw, dpb = linear_backward(dyw, c_proj)
    do = do.reshape(b, t, heads, d // heads).transpose(0, 2, 1, 3)
    datt = do @ v.transpose(0, 1, 3, 2)
    dv = att.transpose(0, 1, 3, 2) @ do
    ds = softmax_backward(datt, att) * scale
    dq = ds @ k
    dk = ds.transpose(0, 1, 3, 2) @ q
    dqkv = np.stack([dq, dk, dv]).transpose(1, 3, 0, 2, 4).reshape(b, t, 3 * d)
    dhw, dqw, dqb = linear_backward(dqkv, c_qkv)
    dh = _unpartition(dhw, n, g, window)
    if shift:
        dh = np.roll(dh, (shift, shift), axis=(1, 2))
    return dh, {"qkv.w": dqw, "qkv.b": dqb, "proj.w": dpw, "proj.b": dpb}


def _block_fwd(prm, x, window, shift, heads):
    n, g, g2, d = x.shape
    if g != g2 or g % window:
        raise ShapeError(f"grid {g}x{g2} not divisible by window {window}")
    if not 0 <= shift < window:
        raise ShapeError(f"shift {shift} outside [0, {window})")
    if d % heads:
        raise ShapeError(f"dim {d} not divisible by {heads} heads")
    a, c_attn = _attn_fwd(prm, x, window, shift, heads)
    x1 = x + a
    f1, c_fc1 = linear_forward(x1, prm["fc1.w"], prm["fc1.b"])
    f1a, c_gelu = gelu_forward(f1)
    f2, c_fc2 = linear_forward(f1a, prm["fc2.w"], prm["fc2.b"])
    return x1 + f2, (c_attn, c_fc1, c_gelu, c_fc2)


def _block_bwd(dout, cache):
    c_attn, c_fc1, c_gelu, c_fc2 = cache
    g = {}
    df1a, g["fc2.w"], g["fc2.b"] = linear_backward(dout, c_fc2)
    dx1, g["fc1.w"], g["fc1.b"] = linear_backward(gelu_backward(df1a, c_gelu), c_fc1)
    dx1 += dout
    dx, ga = _attn_bwd(dx1, c_attn)
    g.update(ga)
    return dx1 + dx, g


def window_attention(tokens, window: int, shift: int, params: dict, heads: int = 1,
                     return_attention: bool = False):
    """One transformer block with (shifted) window self-attention.

    Tokens are rolled by ``-shift`` on both grid axes, split into
    ``window x window`` blocks, attended within each block, and rolled back.
    Residual attention is followed by a residual GELU MLP.
    With ``return_attention`` the softmax weights, shaped
    (windows, heads, window**2, window**2), are returned as well.
    """
    x = np.asarray(tokens, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4:
        raise ShapeError(f"expected (G, G, d) tokens, got {np.shape(tokens)}")
    out, cache = _block_fwd(params, x, window, shift, heads)
    out = out[0] if single else out
    if return_attention:
        return out, cache[0][4]
    return out


# -- patch merging ------------------------------------------------------------

def _merge_fwd(prm, x):
    n, g, _, d = x.shape
    if g % 2:
        raise ShapeError(f"patch merge needs an even grid, got {g}")
    m = g // 2
    cat = x.reshape(n, m, 2, m, 2, d).transpose(0, 1, 3, 2, 4, 5).reshape(n, m, m, 4 * d)
    return linear_forward(cat, prm["w"])


def _merge_bwd(dout, cache):
    dcat, dw, _ = linear_backward(dout, cache)
    n, m, _, d4 = dcat.shape
    d = d4 // 4
    dx = dcat.reshape(n, m, m, 2, 2, d).transpose(0, 1, 3, 2, 4, 5).reshape(n, 2 * m, 2 * m, d)
    return dx, {"w": dw}


def patch_merge(tokens, params: dict) -> np.ndarray:
    """Concatenate each 2x2 neighbourhood (row-major) and project 4d -> 2d."""
    x = np.asarray(tokens, dtype=np.float64)
    single = x.ndim == 3
    out, _ = _merge_fwd(params, x[None] if single else x)
    return out[0] if single else out


# -- model assembly -----------------------------------------------------------

def _block_params(rng, d, ratio):
    h = d * ratio
    return {
        "qkv.w": glorot(rng, (d, 3 * d), d, 3 * d), "qkv.b": np.zeros(3 * d),
        "proj.w": glorot(rng, (d, d), d, d), "proj.b": np.zeros(d),
        "fc1.w": glorot(rng, (d, h), d, h), "fc1.b": np.zeros(h),
        "fc2.w": glorot(rng, (h, d), h, d), "fc2.b": np.zeros(d),
    }


def init_params(config: dict, rng: np.random.Generator) -> dict:
    p, d = config["patch"], config["dim"]
    g = config["input_size"] // p
    params = {
        "embed.w": glorot(rng, (p * p, d), p * p, d),
        "embed.b": np.zeros(d),
        "embed.pos": glorot(rng, (g, g, d), g * g, d),
    }
    for s, depth in enumerate(config["depths"]):
        if s > 0:
            params[f"merge{s}.w"] = glorot(rng, (4 * d, 2 * d), 4 * d, 2 * d)
            d *= 2
        for j in range(depth):
            for k, v in _block_params(rng, d, config["mlp_ratio"]).items():
                params[f"stage{s + 1}.{j}.{k}"] = v
    params["head.w"] = glorot(rng, (d,), d, 1)
    params["head.b"] = np.zeros(1)
    return params


def build_stages(config: dict) -> list[Stage]:
    patch, window = config["patch"], config["window"]
    stages = [
        Stage(
            "embed",
            lambda prm, x: _embed_fwd(_sub(prm, "embed."), x, patch),
            lambda prm, dy, c: (None, _pre(_embed_bwd(dy, c), "embed.")),
        )
    ]
    for s, (depth, heads) in enumerate(zip(config["depths"], config["heads"])):
        if s > 0:
            pre = f"merge{s}."
            stages.append(Stage(
                f"merge{s}",
                lambda prm, x, pre=pre: _merge_fwd(_sub(prm, pre), x),
                lambda prm, dy, c, pre=pre: (lambda r: (r[0], _pre(r[1], pre)))(_merge_bwd(dy, c)),
            ))
        for j in range(depth):
            pre = f"stage{s + 1}.{j}."
            shift = 0 if j % 2 == 0 else window // 2
            stages.append(Stage(
                pre[:-1],
                lambda prm, x, pre=pre, shift=shift, heads=heads: _block_fwd(_sub(prm, pre), x, window, shift, heads),
                lambda prm, dy, c, pre=pre: (lambda r: (r[0], _pre(r[1], pre)))(_block_bwd(dy, c)),
            ))
    stages += [pool_stage(), head_stage()]
    return stages
