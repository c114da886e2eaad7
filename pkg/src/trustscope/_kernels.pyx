# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled patch gather/scatter for same-padded channels-last convolution.

Both kernels must reproduce the numpy fallback bit for bit: col2im adds the
k*k contributions to each input element in row-major kernel order.
"""

import numpy as np
cimport numpy as cnp
from libc.string cimport memcpy, memset

cnp.import_array()


def im2col(const double[:, :, :, ::1] x, int k, int stride):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    cdef int pad = k // 2
    cdef Py_ssize_t ho = (h + 2 * pad - k) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - k) // stride + 1
    out_arr = np.empty((n * ho * wo, k * k * c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, oh, ow, i, j, ih, iw
    cdef size_t run = c * sizeof(double)
    cdef double *dst
    with nogil:
        for b in range(n):
            for oh in range(ho):
                for ow in range(wo):
                    dst = &out[(b * ho + oh) * wo + ow, 0]
                    for i in range(k):
                        ih = oh * stride + i - pad
                        for j in range(k):
                            iw = ow * stride + j - pad
                            if ih < 0 or ih >= h or iw < 0 or iw >= w:
                                memset(dst, 0, run)
                            else:
                                memcpy(dst, &x[b, ih, iw, 0], run)
                            dst += c
    return out_arr


def col2im(const double[:, ::1] cols, Py_ssize_t n, Py_ssize_t h, Py_ssize_t w,
           Py_ssize_t c, int k, int stride):
    cdef int pad = k // 2
    cdef Py_ssize_t ho = (h + 2 * pad - k) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - k) // stride + 1
    dx_arr = np.zeros((n, h, w, c), dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef Py_ssize_t b, oh, ow, i, j, ch, ih, iw
    cdef double *dst
    cdef const double *src
    with nogil:
        for i in range(k):
            for j in range(k):
                for b in range(n):
                    for oh in range(ho):
                        ih = oh * stride + i - pad
                        if ih < 0 or ih >= h:
                            continue
                        for ow in range(wo):
                            iw = ow * stride + j - pad
                            if iw < 0 or iw >= w:
                                continue
                            src = &cols[(b * ho + oh) * wo + ow, (i * k + j) * c]
                            dst = &dx[b, ih, iw, 0]
                            for ch in range(c):
                                dst[ch] += src[ch]
    return dx_arr


cdef double GELU_C = 0.7978845608028654  # sqrt(2 / pi)
cdef double GELU_3A = 3 * 0.044715


# the forward pass stays in numpy: its SIMD tanh is faster than libm's and
# the two differ in the last bit
def gelu_backward(const double[::1] dout, const double[::1] x, const double[::1] t):
    cdef Py_ssize_t i, n = x.shape[0]
    dx_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] dx = dx_arr
    cdef double v, th, du
    with nogil:
        for i in range(n):
            v = x[i]
            th = t[i]
            du = GELU_C * (1.0 + GELU_3A * v * v)
            dx[i] = dout[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du)
    return dx_arr
