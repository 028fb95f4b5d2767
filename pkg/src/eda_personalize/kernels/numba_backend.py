"""Jit-compiled conv kernels; loops ordered for contiguous channel reads.

Kernels compile lazily per dtype (float32 for training, float64 for the
finite-difference gradient checks) and cache to disk. All loops are strictly
ordered, so results are deterministic run to run.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def conv1d_forward(x, w, b, stride):
    B, L, c_in = x.shape
    c_out, _, K = w.shape
    # (C_out, K, C_in) layout makes the innermost reads contiguous
    wt = np.empty((c_out, K, c_in), dtype=w.dtype)
    for o in range(c_out):
        for c in range(c_in):
            for k in range(K):
                wt[o, k, c] = w[o, c, k]
    l_out = (L - K) // stride + 1
    y = np.empty((B, l_out, c_out), dtype=x.dtype)
    for bi in range(B):
        for t in range(l_out):
            base = t * stride
            for o in range(c_out):
                acc = b[o]
                for k in range(K):
                    for c in range(c_in):
                        acc += x[bi, base + k, c] * wt[o, k, c]
                y[bi, t, o] = acc
    return y


@njit(cache=True)
def conv1d_backward(x, w, stride, gy):
    B, L, c_in = x.shape
    c_out, _, K = w.shape
    l_out = gy.shape[1]
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    gb = np.zeros(c_out, dtype=x.dtype)
    for bi in range(B):
        for t in range(l_out):
            base = t * stride
            for o in range(c_out):
                g = gy[bi, t, o]
                gb[o] += g
                for k in range(K):
                    for c in range(c_in):
                        gw[o, c, k] += g * x[bi, base + k, c]
                        gx[bi, base + k, c] += g * w[o, c, k]
    return gx, gw, gb
