"""Forward/backward primitives on float64 numpy arrays.

Every ``*_forward`` returns ``(out, cache)`` and the matching ``*_backward``
takes ``(dout, cache)``.  Spatial tensors are channels-last: ``(N, H, W, C)``.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..kernels import col2im, im2col


def linear_forward(x, w, b=None):
    out = x @ w
    if b is not None:
        out = out + b
    return out, (x, w)


def linear_backward(dout, cache):
    x, w = cache
    x2 = x.reshape(-1, x.shape[-1])
    d2 = dout.reshape(-1, dout.shape[-1])
    dw = x2.T @ d2
    db = d2.sum(axis=0)
    dx = dout @ w.T
    return dx, dw, db


def gelu_forward(x):
    # tanh approximation
    out, t = kernels.gelu_forward(x)
    return out, (x, t)


def gelu_backward(dout, cache):
    x, t = cache
    return kernels.gelu_backward(dout, x, t)


def relu_forward(x):
    out = np.maximum(x, 0.0)
    return out, out > 0


def relu_backward(dout, mask):
    return dout * mask


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(dp, p, axis=-1):
    return p * (dp - (dp * p).sum(axis=axis, keepdims=True))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits(z, y):
    """Mean binary cross-entropy on logits and its gradient w.r.t. ``z``."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    loss = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    return float(loss.mean()), (sigmoid(z) - y) / z.size


def conv_forward(x, w, b, stride=1):
    """Same-padded convolution. ``x``: (N,H,W,Cin), ``w``: (k,k,Cin,Cout)."""
    k = w.shape[0]
    n, h, wd, _ = x.shape
    cols = im2col(x, k, stride)
    ho = (h + 2 * (k // 2) - k) // stride + 1
    wo = (wd + 2 * (k // 2) - k) // stride + 1
    out = cols @ w.reshape(-1, w.shape[-1]) + b
    return out.reshape(n, ho, wo, -1), (cols, x.shape, w, stride)


def conv_backward(dout, cache):
    cols, xshape, w, stride = cache
    k, _, cin, cout = w.shape
    d2 = dout.reshape(-1, cout)
    dw = (cols.T @ d2).reshape(w.shape)
    db = d2.sum(axis=0)
    dcols = d2 @ w.reshape(-1, cout).T
    dx = col2im(dcols, *xshape[:3], cin, k, stride)
    return dx, dw, db


def glorot(rng, shape, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)
