"""Forward and reverse passes over a checkpointed network."""

from __future__ import annotations

import os

import numpy as np

from .. import kernels
from ..errors import ShapeError
from ..rng import derive_rng
from .checkpoint import Checkpoint
from .spec import ModelSpec, param_shapes

# Set EDA_PERSONALIZE_DEBUG=1 to assert every activation stays finite.
_DEBUG_FINITE = os.environ.get("EDA_PERSONALIZE_DEBUG", "") not in ("", "0")


def init_checkpoint(spec: ModelSpec, seed: int, dtype=np.float32) -> Checkpoint:
    """Fan-in-scaled uniform kernels, zero biases, one rng stream per layer."""
    spec.validate()
    weights: dict[str, dict[str, np.ndarray]] = {}
    for name, shapes in param_shapes(spec).items():
        rng = derive_rng(seed, "init", name)
        kshape = shapes["kernel"]
        fan_in = int(np.prod(kshape[1:])) if len(kshape) == 3 else kshape[0]
        bound = 1.0 / np.sqrt(fan_in)
        weights[name] = {
            "kernel": rng.uniform(-bound, bound, size=kshape).astype(dtype),
            "bias": np.zeros(shapes["bias"], dtype=dtype),
        }
    return Checkpoint(spec=spec, weights=weights, frozen=frozenset(), training_meta={"seed": seed})


def _check_batch(spec: ModelSpec, batch: np.ndarray) -> None:
    expected = tuple(spec.input_shape)
    if batch.ndim != len(expected) + 1 or batch.shape[1:] != expected:
        raise ShapeError(f"batch shape {batch.shape} does not match input (B,) + {expected}")


def _assert_finite(name: str, arr: np.ndarray) -> None:
    if _DEBUG_FINITE and not np.isfinite(arr).all():
        raise FloatingPointError(f"non-finite values after layer {name}")


def run_layers(layers, weights, x: np.ndarray, keep_trace: bool = False):
    """Walk a layer slice; with keep_trace also collect each layer's input."""
    trace: list[np.ndarray | None] = []
    for layer in layers:
        trace.append(x if keep_trace else None)
        if layer.kind == "conv1d":
            w = weights[layer.name]
            xin = x
            if layer.padding:
                xin = np.pad(x, ((0, 0), (layer.padding, layer.padding), (0, 0)))
                if keep_trace:
                    trace[-1] = xin
            x = kernels.conv1d_forward(xin, w["kernel"], w["bias"], layer.stride)
        elif layer.kind == "leaky_relu":
            x = kernels.leaky_relu_forward(x, layer.alpha)
        elif layer.kind == "flatten":
            x = x.reshape(x.shape[0], -1)
        else:  # dense, output_linear
            w = weights[layer.name]
            x = kernels.dense_forward(x, w["kernel"], w["bias"])
        _assert_finite(layer.name, x)
    return (x, trace) if keep_trace else x


def forward(checkpoint: Checkpoint, batch: np.ndarray, keep_trace: bool = False):
    """Run the network; with keep_trace, also return per-layer inputs."""
    _check_batch(checkpoint.spec, batch)
    x = np.ascontiguousarray(batch, dtype=checkpoint.dtype)
    return run_layers(checkpoint.spec.layers, checkpoint.weights, x, keep_trace)


def loss_and_grads(checkpoint: Checkpoint, batch: np.ndarray, targets: np.ndarray):
    """Mean-squared-error loss (float64) and gradients for unfrozen layers.

    Backpropagation stops once every remaining upstream layer is frozen or
    parameterless, which makes head-only fine-tuning pay nothing for the
    conv stack's backward pass.
    """
    pred, trace = forward(checkpoint, batch, keep_trace=True)
    targets = np.asarray(targets, dtype=pred.dtype)
    if targets.shape != pred.shape:
        raise ShapeError(f"targets shape {targets.shape} does not match output {pred.shape}")
    diff = pred.astype(np.float64) - targets.astype(np.float64)
    loss = float(np.mean(diff * diff))

    layers = checkpoint.spec.layers
    trainable = set(checkpoint.trainable_layer_names())
    trainable_idx = [i for i, layer in enumerate(layers) if layer.name in trainable]
    grads: dict[str, dict[str, np.ndarray]] = {}
    if not trainable_idx:
        return loss, grads

    # no gradient is needed below the earliest trainable layer
    first = trainable_idx[0]
    g = ((2.0 / diff.size) * diff).astype(pred.dtype)
    for i in range(len(layers) - 1, first - 1, -1):
        layer = layers[i]
        x = trace[i]
        if layer.kind == "conv1d":
            w = checkpoint.weights[layer.name]
            gx, gw, gb = kernels.conv1d_backward(x, w["kernel"], layer.stride, g)
            if layer.name in trainable:
                grads[layer.name] = {"kernel": gw, "bias": gb}
            g = gx[:, layer.padding : gx.shape[1] - layer.padding, :] if layer.padding else gx
        elif layer.kind == "leaky_relu":
            g = kernels.leaky_relu_backward(x, layer.alpha, g)
        elif layer.kind == "flatten":
            g = g.reshape(x.shape)
        else:
            w = checkpoint.weights[layer.name]
            gx, gw, gb = kernels.dense_backward(x, w["kernel"], g)
            if layer.name in trainable:
                grads[layer.name] = {"kernel": gw, "bias": gb}
            g = gx
        _assert_finite(f"{layer.name}:grad", g)
    return loss, grads


def backward(checkpoint: Checkpoint, batch: np.ndarray, targets: np.ndarray):
    """Gradient map of the MSE loss for every unfrozen parametric layer."""
    _, grads = loss_and_grads(checkpoint, batch, targets)
    return grads


def split_frozen_prefix(checkpoint: Checkpoint) -> int:
    """Index of the first layer that can learn; layers before it are inert."""
    trainable = set(checkpoint.trainable_layer_names())
    for i, layer in enumerate(checkpoint.spec.layers):
        if layer.name in trainable:
            return i
    return len(checkpoint.spec.layers)
