"""Pure-numpy conv kernels: stride tricks feeding BLAS matmuls."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    B, L, c_in = x.shape
    c_out, _, K = w.shape
    # (B, L_out, C_in, K) windows, then one (B*L_out, C_in*K) @ (C_in*K, C_out)
    windows = sliding_window_view(x, K, axis=1)[:, ::stride]
    l_out = windows.shape[1]
    flat = np.ascontiguousarray(windows).reshape(B * l_out, c_in * K)
    y = flat @ w.reshape(c_out, c_in * K).T
    return y.reshape(B, l_out, c_out) + b


def conv1d_backward(x: np.ndarray, w: np.ndarray, stride: int, gy: np.ndarray):
    B, L, c_in = x.shape
    c_out, _, K = w.shape
    l_out = gy.shape[1]

    gb = gy.sum(axis=(0, 1))

    windows = sliding_window_view(x, K, axis=1)[:, ::stride]
    flat = np.ascontiguousarray(windows).reshape(B * l_out, c_in * K)
    gw = (gy.reshape(B * l_out, c_out).T @ flat).reshape(c_out, c_in, K)

    # scatter gy back through each kernel tap as a strided slice update
    gx = np.zeros_like(x)
    for k in range(K):
        contribution = gy @ w[:, :, k]  # (B, L_out, C_in)
        gx[:, k : k + stride * (l_out - 1) + 1 : stride, :] += contribution
    return gx, gw, gb
