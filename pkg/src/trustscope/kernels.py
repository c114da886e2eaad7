"""Hot kernels (conv gather/scatter, GELU backward) with an import-time backend choice.

The compiled ``_kernels`` extension is used when it is importable; otherwise,
or when ``TRUSTSCOPE_PURE=1`` is set, the numpy implementations below are
used.  Both backends produce bit-identical results.
"""

from __future__ import annotations

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col_numpy(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    """Patches of a channels-last batch as rows ordered ``(kh, kw, C)``."""
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    n, ho, wo = win.shape[:3]
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, -1)


def col2im_numpy(cols: np.ndarray, n: int, h: int, w: int, c: int, k: int, stride: int) -> np.ndarray:
    """Adjoint of :func:`im2col_numpy`: scatter-add patch rows back to pixels."""
    pad = k // 2
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    d = cols.reshape(n, ho, wo, k, k, c)
    dxp = np.zeros((n, h + 2 * pad, w + 2 * pad, c))
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :] += d[:, :, :, i, j, :]
    return dxp[:, pad:pad + h, pad:pad + w, :] if pad else dxp


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu_forward_numpy(x: np.ndarray):
    """Tanh-approximated GELU; returns ``(out, tanh_term)``."""
    t = np.tanh(_GELU_C * (x + 0.044715 * (x * x * x)))
    return 0.5 * x * (1.0 + t), t


def gelu_backward_numpy(dout: np.ndarray, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    du = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
    return dout * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def _load_compiled():
    if os.environ.get("TRUSTSCOPE_PURE", "") not in ("", "0"):
        return None
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()
BACKEND = "compiled" if _compiled is not None else "numpy"


def im2col(x, k, stride):
    if _compiled is not None:
        return _compiled.im2col(np.ascontiguousarray(x, dtype=np.float64), k, stride)
    return im2col_numpy(x, k, stride)


def col2im(cols, n, h, w, c, k, stride):
    if _compiled is not None:
        return _compiled.col2im(np.ascontiguousarray(cols, dtype=np.float64), n, h, w, c, k, stride)
    return col2im_numpy(cols, n, h, w, c, k, stride)


gelu_forward = gelu_forward_numpy


def gelu_backward(dout, x, t):
    if _compiled is not None:
        c = np.ascontiguousarray
        dx = _compiled.gelu_backward(c(dout, dtype=np.float64).ravel(), c(x).ravel(), c(t).ravel())
        return dx.reshape(x.shape)
    return gelu_backward_numpy(dout, x, t)
