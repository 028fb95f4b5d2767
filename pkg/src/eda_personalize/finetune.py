"""Downstream stress regression, with and without transferred features.

Two ways to build the same architecture:

* ``ssl_finetuned`` — copy the pretext model's conv stack bit-exactly,
  freeze it, and train a freshly initialized 50/30/10 dense head.
* ``supervised_scratch`` — identical layer graph, every parameter
  randomly initialized and trainable.

Both are always fitted on exactly the same sampled windows and scored on
the same held-out test windows, which is what makes their RMSEs comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ConsistencyError, ShapeError
from .nn import (
    HEAD_DENSE_UNITS,
    Checkpoint,
    ModelSpec,
    LayerSpec,
    evaluate_rmse,
    forward,
    init_checkpoint,
    make_optimizer,
    train,
)
from .rng import derive_seed, subset_fingerprint
from .windowing import WindowedDataset

METHOD_SSL = "ssl_finetuned"
METHOD_SCRATCH = "supervised_scratch"
METHODS = (METHOD_SSL, METHOD_SCRATCH)

CLAMP_RANGE = (0.25, 1.0)


@dataclass(frozen=True)
class TransferPlan:
    """What moves from a pretext checkpoint into a downstream model."""

    source: Checkpoint
    head_units: tuple[int, ...] = HEAD_DENSE_UNITS
    frozen: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frozen", tuple(self.source.spec.conv_layer_names()))


@dataclass(frozen=True)
class FinetuneConfig:
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    head_units: tuple[int, ...] = HEAD_DENSE_UNITS


@dataclass
class FitResult:
    model: Checkpoint | None
    method: str
    question_index: int
    subject_id: str
    train_rmse: float
    test_rmse: float
    budget: int
    replica_seed: int
    train_fingerprint: str = ""
    replica: int = 0


class StressPrediction(NamedTuple):
    raw: float
    clamped: float


def downstream_spec_like(pretext_spec_: ModelSpec, head_units=HEAD_DENSE_UNITS) -> ModelSpec:
    """The downstream layer graph sharing the pretext model's conv stack.

    Reuses the pretext conv/activation/flatten layers verbatim (so shapes
    and names line up exactly) and replaces everything after the flatten
    with the dense regression head and a scalar linear output.
    """
    kinds = [layer.kind for layer in pretext_spec_.layers]
    if "flatten" not in kinds:
        raise ShapeError("source checkpoint has no flatten layer to transfer at")
    cut = kinds.index("flatten") + 1
    alpha = pretext_spec_.layers[0].alpha
    layers = list(pretext_spec_.layers[:cut])
    for i, units in enumerate(head_units, start=1):
        layers.append(LayerSpec("dense", f"head{i}", units=units, alpha=alpha))
        layers.append(LayerSpec("leaky_relu", f"head{i}_act", alpha=alpha))
    layers.append(LayerSpec("output_linear", "out", units=1))
    spec = ModelSpec(pretext_spec_.input_shape, tuple(layers))
    spec.validate()
    return spec


def build_finetune_model(
    pretext: Checkpoint, head_seed: int = 0, head_units=HEAD_DENSE_UNITS
) -> Checkpoint:
    """Transfer + freeze the conv stack, initialize a fresh regression head."""
    pretext.validate()
    spec = downstream_spec_like(pretext.spec, head_units)
    conv_names = spec.conv_layer_names()
    model = init_checkpoint(spec, head_seed, dtype=pretext.dtype)
    for name in conv_names:
        model.weights[name] = {k: arr.copy() for k, arr in pretext.weights[name].items()}
    model.frozen = frozenset(conv_names)
    model.training_meta = {
        "head_seed": head_seed,
        "subject_id": pretext.training_meta.get("subject_id"),
        "normalization": pretext.training_meta.get("normalization"),
        "source_final_loss": pretext.training_meta.get("final_loss"),
    }
    model.validate()
    return model


def scratch_model(
    spec_source: ModelSpec, seed: int, head_units=HEAD_DENSE_UNITS, dtype=np.float32
) -> Checkpoint:
    """The same downstream architecture with nothing transferred or frozen."""
    spec = downstream_spec_like(spec_source, head_units)
    model = init_checkpoint(spec, seed, dtype=dtype)
    model.training_meta = {"head_seed": seed}
    return model


def fit(
    method: str,
    train_set: WindowedDataset,
    test_set: WindowedDataset,
    config: FinetuneConfig = FinetuneConfig(),
    pretext: Checkpoint | None = None,
) -> FitResult:
    """Fit one downstream model and score it on held-out windows.

    ``pretext`` is required for both methods: ssl transfers its conv
    weights, scratch borrows only its layer geometry so the two arms are
    architecturally identical.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    if pretext is None:
        raise ConfigError("fit requires the subject's pretext checkpoint")
    overlap = set(train_set.start_indices()) & set(test_set.start_indices())
    if overlap:
        raise ConsistencyError(
            f"train and test sets share {len(overlap)} window start indices"
        )
    if method == METHOD_SSL:
        model = build_finetune_model(
            pretext, head_seed=derive_seed(config.seed, "head-init"), head_units=config.head_units
        )
    else:
        model = scratch_model(
            pretext.spec,
            seed=derive_seed(config.seed, "scratch-init"),
            head_units=config.head_units,
            dtype=pretext.dtype,
        )
    optimizer = make_optimizer("adam", config.learning_rate)
    fitted = train(
        model,
        train_set,
        optimizer,
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=derive_seed(config.seed, "fit", method),
    )
    prov = train_set.provenance
    example = train_set.examples[0]
    return FitResult(
        model=fitted,
        method=method,
        question_index=getattr(example, "question_index", 0),
        subject_id=prov.subject_id if prov else "",
        train_rmse=evaluate_rmse(fitted, train_set),
        test_rmse=evaluate_rmse(fitted, test_set),
        budget=len(train_set),
        replica_seed=config.seed,
        train_fingerprint=subset_fingerprint(train_set.start_indices()),
    )


def predict_stress(model: Checkpoint, window) -> StressPrediction:
    """Scalar stress prediction for one input window.

    The raw regression output is preserved; the clamped companion value is
    squeezed into the valid normalized-answer range [0.25, 1.0].
    """
    window = np.asarray(window, dtype=model.dtype)
    expected = model.spec.input_shape[0]
    if window.ndim != 1 or window.shape[0] != expected:
        raise ShapeError(f"window must be a flat vector of {expected} samples, got {window.shape}")
    out = forward(model, window[None, :, None])
    if out.shape != (1, 1):
        raise ShapeError(f"model emits {out.shape[1]} values per window; expected a scalar")
    raw = float(out[0, 0])
    lo, hi = CLAMP_RANGE
    return StressPrediction(raw=raw, clamped=min(hi, max(lo, raw)))
