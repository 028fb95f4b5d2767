"""Checkpoints: named weight arrays, freeze flags, and their text format.

The on-disk form is versioned JSON. Weights are 32-bit floats written as
decimal numbers; float32 -> decimal -> float32 is bit-exact because every
float32 widens losslessly to the float64 that json round-trips.
"""

from __future__ import annotations

import json
import tempfile
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FormatError, ShapeError
from .spec import LayerSpec, ModelSpec, param_shapes

CHECKPOINT_FORMAT = "eda-personalize-checkpoint"
CHECKPOINT_VERSION = 1

_LAYER_FIELDS = ("kind", "name", "filters", "kernel_size", "stride", "padding", "units", "alpha")


@dataclass
class Checkpoint:
    spec: ModelSpec
    weights: dict[str, dict[str, np.ndarray]]
    frozen: frozenset[str] = frozenset()
    training_meta: dict = field(default_factory=dict)

    @property
    def dtype(self) -> np.dtype:
        for params in self.weights.values():
            for arr in params.values():
                return arr.dtype
        return np.dtype(np.float32)

    def clone(self) -> "Checkpoint":
        return Checkpoint(
            spec=self.spec,
            weights={
                name: {k: arr.copy() for k, arr in params.items()}
                for name, params in self.weights.items()
            },
            frozen=frozenset(self.frozen),
            training_meta=dict(self.training_meta),
        )

    def astype(self, dtype) -> "Checkpoint":
        out = self.clone()
        out.weights = {
            name: {k: arr.astype(dtype) for k, arr in params.items()}
            for name, params in out.weights.items()
        }
        return out

    def trainable_layer_names(self) -> tuple[str, ...]:
        return tuple(
            l.name for l in self.spec.layers if l.has_params() and l.name not in self.frozen
        )

    def validate(self) -> None:
        self.spec.validate()
        expected = param_shapes(self.spec)
        if set(self.weights) != set(expected):
            raise ShapeError(
                f"weight layers {sorted(self.weights)} do not match spec layers {sorted(expected)}"
            )
        for name, params in expected.items():
            for pname, shape in params.items():
                if pname not in self.weights[name]:
                    raise ShapeError(f"layer {name} is missing its {pname} array")
                actual = tuple(self.weights[name][pname].shape)
                if actual != shape:
                    raise ShapeError(f"layer {name} {pname} has shape {actual}, expected {shape}")
        layer_names = {l.name for l in self.spec.layers}
        stray = set(self.frozen) - layer_names
        if stray:
            raise ShapeError(f"frozen set names unknown layers: {sorted(stray)}")


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    checkpoint.validate()
    doc = {
        "format": CHECKPOINT_FORMAT,
        "format_version": CHECKPOINT_VERSION,
        "dtype": str(np.dtype(checkpoint.dtype)),
        "input_shape": list(checkpoint.spec.input_shape),
        "layers": [
            {f: getattr(layer, f) for f in _LAYER_FIELDS} for layer in checkpoint.spec.layers
        ],
        "frozen": sorted(checkpoint.frozen),
        "training_meta": checkpoint.training_meta,
        "weights": {
            name: {
                pname: {
                    "shape": list(arr.shape),
                    "data": arr.astype(np.float64).reshape(-1).tolist(),
                }
                for pname, arr in params.items()
            }
            for name, params in checkpoint.weights.items()
        },
    }
    payload = json.dumps(doc, indent=None, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a valid checkpoint document: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{path}: not an eda-personalize checkpoint")
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {doc.get('format_version')}")
    dtype = np.dtype(doc.get("dtype", "float32"))
    layers = tuple(LayerSpec(**{f: entry[f] for f in _LAYER_FIELDS}) for entry in doc["layers"])
    spec = ModelSpec(tuple(doc["input_shape"]), layers)
    weights: dict[str, dict[str, np.ndarray]] = {}
    for name, params in doc["weights"].items():
        weights[name] = {}
        for pname, blob in params.items():
            shape = tuple(blob["shape"])
            flat = np.asarray(blob["data"], dtype=np.float64)
            expected = int(np.prod(shape)) if shape else 1
            if flat.size != expected:
                raise ShapeError(
                    f"{path}: layer {name} {pname} carries {flat.size} values for shape {shape}"
                )
            weights[name][pname] = flat.reshape(shape).astype(dtype)
    checkpoint = Checkpoint(
        spec=spec,
        weights=weights,
        frozen=frozenset(doc.get("frozen", [])),
        training_meta=dict(doc.get("training_meta", {})),
    )
    checkpoint.validate()
    return checkpoint
