"""Layer-by-layer architecture descriptions and static shape inference."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ShapeError

LAYER_KINDS = ("conv1d", "dense", "leaky_relu", "flatten", "output_linear")
PARAMETRIC_KINDS = ("conv1d", "dense", "output_linear")

DEFAULT_CONV_FILTERS = (40, 30, 18, 30)
DEFAULT_KERNEL_SIZE = 7
DEFAULT_CONV_STRIDE = 3
DEFAULT_PADDING = 0
DEFAULT_ALPHA = 0.01
PRETEXT_DENSE_UNITS = (70, 30)
HEAD_DENSE_UNITS = (50, 30, 10)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str
    filters: int = 0
    kernel_size: int = 0
    stride: int = 1
    padding: int = 0
    units: int = 0
    alpha: float = DEFAULT_ALPHA

    def has_params(self) -> bool:
        return self.kind in PARAMETRIC_KINDS


@dataclass(frozen=True)
class ModelSpec:
    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise ShapeError(f"duplicate layer names: {names}")
        if not self.layers or self.layers[-1].kind != "output_linear":
            raise ShapeError("the final layer must be output_linear")
        infer_shapes(self)  # raises on any inconsistency

    def layer(self, name: str) -> LayerSpec:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def conv_layer_names(self) -> tuple[str, ...]:
        return tuple(l.name for l in self.layers if l.kind == "conv1d")

    def parametric_layer_names(self) -> tuple[str, ...]:
        return tuple(l.name for l in self.layers if l.has_params())


def infer_shapes(spec: ModelSpec) -> list[tuple[int, ...]]:
    """Per-layer output shapes (batch axis omitted); raises ShapeError.

    Top-level specs take (length, channels) inputs; the flat 1-tuple form
    exists for internal head-only sub-networks.
    """
    shape: tuple[int, ...] = tuple(spec.input_shape)
    if len(shape) not in (1, 2) or any(d <= 0 for d in shape):
        raise ShapeError(f"input shape must be (length, channels) or (features,), got {shape}")
    shapes = []
    for layer in spec.layers:
        shape = _layer_output_shape(layer, shape)
        shapes.append(shape)
    return shapes


def _layer_output_shape(layer: LayerSpec, shape: tuple[int, ...]) -> tuple[int, ...]:
    if layer.kind == "conv1d":
        if len(shape) != 2:
            raise ShapeError(f"layer {layer.name}: conv1d needs (length, channels) input, got {shape}")
        if layer.filters <= 0 or layer.kernel_size <= 0 or layer.stride <= 0 or layer.padding < 0:
            raise ShapeError(f"layer {layer.name}: invalid conv hyperparameters")
        length = shape[0] + 2 * layer.padding
        if length < layer.kernel_size:
            raise ShapeError(
                f"layer {layer.name}: kernel {layer.kernel_size} exceeds padded length {length}"
            )
        return ((length - layer.kernel_size) // layer.stride + 1, layer.filters)
    if layer.kind in ("dense", "output_linear"):
        if len(shape) != 1:
            raise ShapeError(f"layer {layer.name}: {layer.kind} needs a flattened input, got {shape}")
        if layer.units <= 0:
            raise ShapeError(f"layer {layer.name}: units must be positive")
        return (layer.units,)
    if layer.kind == "leaky_relu":
        return shape
    if layer.kind == "flatten":
        size = 1
        for d in shape:
            size *= d
        return (size,)
    raise ShapeError(f"layer {layer.name}: unknown kind {layer.kind!r}")


def param_shapes(spec: ModelSpec) -> dict[str, dict[str, tuple[int, ...]]]:
    """kernel/bias shapes for every parametric layer."""
    shapes: dict[str, dict[str, tuple[int, ...]]] = {}
    current: tuple[int, ...] = tuple(spec.input_shape)
    for layer in spec.layers:
        if layer.kind == "conv1d":
            c_in = current[1]
            shapes[layer.name] = {
                "kernel": (layer.filters, c_in, layer.kernel_size),
                "bias": (layer.filters,),
            }
        elif layer.kind in ("dense", "output_linear"):
            shapes[layer.name] = {
                "kernel": (current[0], layer.units),
                "bias": (layer.units,),
            }
        current = _layer_output_shape(layer, current)
    return shapes


def _conv_stack(
    conv_filters, kernel_size, conv_stride, padding, alpha
) -> list[LayerSpec]:
    layers = []
    for i, filters in enumerate(conv_filters, start=1):
        layers.append(
            LayerSpec(
                "conv1d",
                f"conv{i}",
                filters=filters,
                kernel_size=kernel_size,
                stride=conv_stride,
                padding=padding,
            )
        )
        layers.append(LayerSpec("leaky_relu", f"conv{i}_act", alpha=alpha))
    return layers


def pretext_spec(
    window: int = 7000,
    horizon: int = 40,
    conv_filters=DEFAULT_CONV_FILTERS,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    conv_stride: int = DEFAULT_CONV_STRIDE,
    padding: int = DEFAULT_PADDING,
    dense_units=PRETEXT_DENSE_UNITS,
    alpha: float = DEFAULT_ALPHA,
) -> ModelSpec:
    """Forecasting network: conv stack, 70/30 dense stage, linear horizon output."""
    layers = _conv_stack(conv_filters, kernel_size, conv_stride, padding, alpha)
    layers.append(LayerSpec("flatten", "flatten"))
    for i, units in enumerate(dense_units, start=1):
        layers.append(LayerSpec("dense", f"dense{i}", units=units))
        layers.append(LayerSpec("leaky_relu", f"dense{i}_act", alpha=alpha))
    layers.append(LayerSpec("output_linear", "out", units=horizon))
    spec = ModelSpec((window, 1), tuple(layers))
    spec.validate()
    return spec


def downstream_spec(
    window: int = 7000,
    conv_filters=DEFAULT_CONV_FILTERS,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
    conv_stride: int = DEFAULT_CONV_STRIDE,
    padding: int = DEFAULT_PADDING,
    head_units=HEAD_DENSE_UNITS,
    alpha: float = DEFAULT_ALPHA,
) -> ModelSpec:
    """Stress regressor: the same conv stack under a fresh 50/30/10 head."""
    layers = _conv_stack(conv_filters, kernel_size, conv_stride, padding, alpha)
    layers.append(LayerSpec("flatten", "flatten"))
    for i, units in enumerate(head_units, start=1):
        layers.append(LayerSpec("dense", f"head{i}", units=units))
        layers.append(LayerSpec("leaky_relu", f"head{i}_act", alpha=alpha))
    layers.append(LayerSpec("output_linear", "out", units=1))
    spec = ModelSpec((window, 1), tuple(layers))
    spec.validate()
    return spec
