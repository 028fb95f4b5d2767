"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The 1D convolution forward/backward passes dominate training time, so they
exist twice: ``numba_backend`` carries ``@njit``-compiled loops and
``numpy_backend`` builds the same results from stride tricks plus BLAS
matmuls. The active implementation is chosen once at import from the
``EDA_PERSONALIZE_BACKEND`` environment variable:

    numba   force the jit kernels (raises if numba is unavailable)
    numpy   force the stride-trick fallback
    auto    numba when importable, else numpy (default)

Both backends produce the same values up to float32 summation order; a run
is bit-reproducible as long as the backend stays fixed.
``benchmarks/bench_kernels.py`` times the two side by side.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError

_ENV_VAR = "EDA_PERSONALIZE_BACKEND"
_active_name = None
_active_module = None


def _load(name: str):
    if name == "numpy":
        from . import numpy_backend

        return numpy_backend
    if name == "numba":
        from . import numba_backend

        return numba_backend
    raise ConfigError(f"{_ENV_VAR} must be 'numba', 'numpy' or 'auto', got {name!r}")


def set_backend(name: str) -> str:
    """Select the conv kernel implementation; returns the resolved name."""
    global _active_name, _active_module
    if name == "auto":
        try:
            _active_module = _load("numba")
            _active_name = "numba"
        except ImportError:
            _active_module = _load("numpy")
            _active_name = "numpy"
    else:
        _active_module = _load(name)
        _active_name = name
    return _active_name


def active_backend() -> str:
    return _active_name


set_backend(os.environ.get(_ENV_VAR, "auto"))


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    """Valid (unpadded) 1D convolution.

    x: (B, L, C_in), w: (C_out, C_in, K), b: (C_out,) -> (B, L_out, C_out)
    with L_out = (L - K)//stride + 1.
    """
    return _active_module.conv1d_forward(x, w, b, stride)


def conv1d_backward(x: np.ndarray, w: np.ndarray, stride: int, gy: np.ndarray):
    """Gradients of conv1d_forward: returns (gx, gw, gb)."""
    return _active_module.conv1d_backward(x, w, stride, gy)


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # BLAS already owns this; both backends share it.
    return x @ w + b


def dense_backward(x: np.ndarray, w: np.ndarray, gy: np.ndarray):
    return gy @ w.T, x.T @ gy, gy.sum(axis=0)


def leaky_relu_forward(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x > 0, x, x * np.asarray(alpha, dtype=x.dtype))


def leaky_relu_backward(x: np.ndarray, alpha: float, gy: np.ndarray) -> np.ndarray:
    one = np.asarray(1, dtype=x.dtype)
    return gy * np.where(x > 0, one, np.asarray(alpha, dtype=x.dtype))
