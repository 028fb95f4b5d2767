"""Mini-batch training, batched prediction, and RMSE evaluation.

When a checkpoint's leading layers are all frozen or parameterless (the
usual shape of transfer fine-tuning), their activations cannot change
during training, so ``train`` computes them once per example and runs the
optimization loop on the small trailing sub-network only.  Per-example
activations do not depend on how examples are batched, so this caching is
exact, not an approximation.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DivergenceError, EmptyDatasetError, ShapeError
from ..rng import derive_rng
from ..windowing import WindowedDataset
from .checkpoint import Checkpoint
from .network import _check_batch, loss_and_grads, run_layers, split_frozen_prefix
from .optim import OptimizerState
from .spec import ModelSpec, infer_shapes

# examples per chunk when precomputing frozen-prefix features / predictions
_CHUNK = 256


def _stack_inputs(dataset: WindowedDataset, indices, dtype) -> np.ndarray:
    """Assemble a (B,) + input_shape batch from per-example window views."""
    flat = np.stack([dataset.examples[i].input for i in indices])
    return flat.astype(dtype, copy=False)[:, :, None]


def _prefix_features(
    model: Checkpoint, dataset: WindowedDataset, split: int
) -> np.ndarray:
    """Activations at the frozen/trainable boundary for every example."""
    boundary = infer_shapes(model.spec)[split - 1]
    prefix = model.spec.layers[:split]
    n = len(dataset)
    out = np.empty((n, *boundary), dtype=model.dtype)
    for off in range(0, n, _CHUNK):
        idx = range(off, min(off + _CHUNK, n))
        out[off : off + len(idx)] = run_layers(
            prefix, model.weights, _stack_inputs(dataset, idx, model.dtype)
        )
    return out


def _suffix_checkpoint(model: Checkpoint, split: int) -> Checkpoint:
    """A checkpoint over layers[split:] sharing the parent's weight arrays.

    The optimizer updates arrays in place, so training the suffix mutates
    the parent checkpoint's weights directly.
    """
    suffix_layers = model.spec.layers[split:]
    boundary = infer_shapes(model.spec)[split - 1]
    spec = ModelSpec(tuple(boundary), suffix_layers)
    names = {layer.name for layer in suffix_layers}
    sub = Checkpoint(
        spec=spec,
        weights={name: model.weights[name] for name in names if name in model.weights},
        frozen=frozenset(name for name in model.frozen if name in names),
    )
    sub.validate()
    return sub


def train(
    checkpoint: Checkpoint,
    dataset: WindowedDataset,
    optimizer: OptimizerState,
    epochs: int,
    batch_size: int = 32,
    seed: int = 0,
) -> Checkpoint:
    """Fit a clone of ``checkpoint`` to ``dataset`` with mini-batch MSE.

    Examples are reshuffled every epoch from a stream derived from
    ``seed``, so a (checkpoint, dataset, optimizer, seed) tuple always
    trains identically under a fixed kernel backend.  Raises
    DivergenceError the moment the running loss stops being finite.
    """
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")
    if batch_size <= 0:
        raise ConfigError(f"batch size must be positive, got {batch_size}")
    n = len(dataset)
    if n == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")

    model = checkpoint.clone()
    if epochs == 0:
        return model
    if not model.trainable_layer_names():
        raise ConfigError("every parametric layer is frozen; nothing to train")

    targets = dataset.stacked_targets()
    split = split_frozen_prefix(model)
    if split > 0:
        features = _prefix_features(model, dataset, split)
        net = _suffix_checkpoint(model, split)
    else:
        features = None
        net = model

    epoch_losses: list[float] = []
    for epoch in range(epochs):
        order = derive_rng(seed, "train", epoch).permutation(n)
        total = 0.0
        for off in range(0, n, batch_size):
            idx = order[off : off + batch_size]
            xb = features[idx] if features is not None else _stack_inputs(dataset, idx, model.dtype)
            loss, grads = loss_and_grads(net, xb, targets[idx])
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"loss became non-finite ({loss}) at epoch {epoch}", epoch=epoch
                )
            optimizer.apply(net.weights, grads)
            total += loss * len(idx)
        epoch_losses.append(total / n)

    model.training_meta = {
        **model.training_meta,
        "train_seed": seed,
        "epochs": epochs,
        "batch_size": batch_size,
        "optimizer": optimizer.kind,
        "learning_rate": optimizer.learning_rate,
        "examples": n,
        "final_loss": epoch_losses[-1],
        "epoch_losses": epoch_losses,
    }
    return model


def predict(checkpoint: Checkpoint, data, batch_size: int = _CHUNK) -> np.ndarray:
    """Model outputs, chunked so large datasets never stack all at once.

    ``data`` is either a WindowedDataset or a pre-stacked input array.
    """
    if isinstance(data, WindowedDataset):
        n = len(data)
        fetch = lambda idx: _stack_inputs(data, idx, checkpoint.dtype)
    else:
        arr = np.ascontiguousarray(data, dtype=checkpoint.dtype)
        if arr.ndim:
            _check_batch(checkpoint.spec, arr)
        n = arr.shape[0] if arr.ndim else 0
        fetch = lambda idx: arr[idx.start : idx.stop]
    if n == 0:
        raise EmptyDatasetError("cannot predict on an empty dataset")
    units = checkpoint.spec.layers[-1].units
    out = np.empty((n, units), dtype=checkpoint.dtype)
    for off in range(0, n, batch_size):
        idx = range(off, min(off + batch_size, n))
        out[off : off + len(idx)] = run_layers(
            checkpoint.spec.layers, checkpoint.weights, fetch(idx)
        )
    return out


def rmse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Root-mean-squared error in float64 over every element."""
    predictions = np.asarray(predictions)
    targets = np.asarray(targets)
    if predictions.shape != targets.shape:
        raise ShapeError(
            f"predictions shape {predictions.shape} does not match targets {targets.shape}"
        )
    diff = predictions.astype(np.float64) - targets.astype(np.float64)
    return float(np.sqrt(np.mean(diff * diff)))


def evaluate_rmse(checkpoint: Checkpoint, dataset: WindowedDataset, batch_size: int = _CHUNK) -> float:
    """RMSE of the model over a windowed dataset's stored targets."""
    return rmse(predict(checkpoint, dataset, batch_size), dataset.stacked_targets())
