"""Compare the numba and numpy convolution kernels on realistic shapes.

Run:  python3 benchmarks/bench_kernels.py [--repeats N] [--batch B]

Times the forward and backward conv kernels on every layer shape of the
full-scale forecasting model (7000-sample windows), prints per-layer and
whole-stack timings for both backends, and reports the speed ratio.  The
first numba call triggers JIT compilation and is excluded from timing.

Use EDA_PERSONALIZE_BACKEND (or kernels.set_backend) to pick the faster
backend for your machine; on single-core boxes with a good BLAS the numpy
path usually wins, on wider machines numba's parallel loops can.
"""

import argparse
import time

import numpy as np

from eda_personalize import kernels
from eda_personalize.nn import (
    DEFAULT_CONV_FILTERS,
    DEFAULT_CONV_STRIDE,
    DEFAULT_KERNEL_SIZE,
    infer_shapes,
    pretext_spec,
)


def conv_layer_shapes(window: int):
    """(in_length, in_channels, out_channels) per conv layer at this window."""
    spec = pretext_spec(window=window)
    shapes = infer_shapes(spec)
    layers = []
    in_shape = (window, 1)
    for layer, out_shape in zip(spec.layers, shapes):
        if layer.kind == "conv1d":
            layers.append((in_shape[0], in_shape[1], layer.filters))
        in_shape = out_shape
    return layers


def time_call(fn, args, repeats):
    fn(*args)  # warmup: JIT and page-in
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_backend(backend: str, batch: int, window: int, repeats: int):
    kernels.set_backend(backend)
    rng = np.random.default_rng(0)
    rows = []
    for in_length, in_channels, out_channels in conv_layer_shapes(window):
        x = rng.normal(size=(batch, in_length, in_channels)).astype(np.float32)
        w = rng.normal(size=(out_channels, in_channels, DEFAULT_KERNEL_SIZE)).astype(np.float32)
        b = np.zeros(out_channels, dtype=np.float32)
        fwd = time_call(kernels.conv1d_forward, (x, w, b, DEFAULT_CONV_STRIDE), repeats)
        y = kernels.conv1d_forward(x, w, b, DEFAULT_CONV_STRIDE)
        gy = rng.normal(size=y.shape).astype(np.float32)
        bwd = time_call(kernels.conv1d_backward, (x, w, DEFAULT_CONV_STRIDE, gy), repeats)
        rows.append(((in_length, in_channels, out_channels), fwd, bwd))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats (best-of)")
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--window", type=int, default=7000)
    args = parser.parse_args()

    backends = ["numpy"]
    try:
        import numba  # noqa: F401

        backends.append("numba")
    except ImportError:
        print("numba not installed; timing the numpy backend only")

    results = {}
    for backend in backends:
        print(f"\n[{backend}] conv kernels, batch {args.batch}, window {args.window}")
        rows = bench_backend(backend, args.batch, args.window, args.repeats)
        total = 0.0
        for (in_length, in_channels, out_channels), fwd, bwd in rows:
            total += fwd + bwd
            print(
                f"  {in_length:>5} x {in_channels:>2} -> {out_channels:>2}   "
                f"forward {fwd * 1e3:8.2f} ms   backward {bwd * 1e3:8.2f} ms"
            )
        print(f"  whole stack: {total * 1e3:.2f} ms per pass")
        results[backend] = total

    if len(results) == 2:
        ratio = results["numba"] / results["numpy"]
        faster = "numpy" if ratio > 1 else "numba"
        print(
            f"\nnumba/numpy time ratio: {ratio:.2f}x -> {faster} is faster here; "
            f"set EDA_PERSONALIZE_BACKEND={faster} for training runs"
        )
    kernels.set_backend("auto")


if __name__ == "__main__":
    main()
