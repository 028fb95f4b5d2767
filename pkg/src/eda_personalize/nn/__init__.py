"""A small dependency-free neural network stack for 1-D signals.

Models are plain data: a ModelSpec describes the layer graph, a Checkpoint
holds its weight arrays, and free functions (forward, train, predict)
do the work.  Anything in a checkpoint round-trips through versioned JSON
bit-exactly.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .network import backward, forward, init_checkpoint, loss_and_grads, split_frozen_prefix
from .optim import OptimizerState, make_optimizer
from .spec import (
    DEFAULT_ALPHA,
    DEFAULT_CONV_FILTERS,
    DEFAULT_CONV_STRIDE,
    DEFAULT_KERNEL_SIZE,
    HEAD_DENSE_UNITS,
    PRETEXT_DENSE_UNITS,
    LayerSpec,
    ModelSpec,
    downstream_spec,
    infer_shapes,
    param_shapes,
    pretext_spec,
)
from .training import evaluate_rmse, predict, rmse, train

__all__ = [
    "Checkpoint",
    "LayerSpec",
    "ModelSpec",
    "OptimizerState",
    "DEFAULT_ALPHA",
    "DEFAULT_CONV_FILTERS",
    "DEFAULT_CONV_STRIDE",
    "DEFAULT_KERNEL_SIZE",
    "HEAD_DENSE_UNITS",
    "PRETEXT_DENSE_UNITS",
    "backward",
    "downstream_spec",
    "evaluate_rmse",
    "forward",
    "infer_shapes",
    "init_checkpoint",
    "load_checkpoint",
    "loss_and_grads",
    "make_optimizer",
    "param_shapes",
    "predict",
    "pretext_spec",
    "rmse",
    "save_checkpoint",
    "split_frozen_prefix",
    "train",
]
