"""Deterministic slicing of signals into fixed-size training examples.

Pretext examples pair a ``window``-sample input with the ``horizon`` samples
that immediately follow it; downstream examples pair the same input shape
with the normalized STAI answer of the condition span the window falls in.
Example inputs are zero-copy views into the record's sample array.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, EmptyDatasetError, InsufficientDataError
from .rng import derive_rng
from .signal_store import LabelSet, SignalRecord

DEFAULT_WINDOW = 7000
DEFAULT_HORIZON = 40
DEFAULT_STRIDE = 100


@dataclass(frozen=True)
class PretextExample:
    input: np.ndarray
    target: np.ndarray
    start_index: int


@dataclass(frozen=True)
class DownstreamExample:
    input: np.ndarray
    label: float
    question_index: int
    condition_tag: str
    start_index: int


@dataclass(frozen=True)
class Provenance:
    subject_id: str
    kind: str  # "pretext" | "downstream"
    window: int
    horizon: int
    stride: int


@dataclass
class WindowedDataset:
    """Examples plus where they came from.

    ``build_pretext``/``build_downstream`` emit examples with strictly
    increasing start indices; ``sample_budget`` keeps its sampled order.
    """

    examples: list = field(default_factory=list)
    provenance: Provenance | None = None

    def __len__(self) -> int:
        return len(self.examples)

    def start_indices(self) -> list[int]:
        return [ex.start_index for ex in self.examples]

    def stacked_inputs(self) -> np.ndarray:
        """(N, window, 1) batch array, copied out of the source signal."""
        return np.stack([ex.input for ex in self.examples])[:, :, None]

    def stacked_targets(self) -> np.ndarray:
        """(N, horizon) forecast targets or (N, 1) labels."""
        if self.provenance and self.provenance.kind == "pretext":
            return np.stack([ex.target for ex in self.examples])
        return np.asarray([[ex.label] for ex in self.examples], dtype=np.float32)

    def subset(self, indices) -> "WindowedDataset":
        return WindowedDataset([self.examples[i] for i in indices], self.provenance)


def pretext_example_count(n_samples: int, window: int, horizon: int, stride: int) -> int:
    """Closed-form count of sliding pretext windows: floor((L-w-h)/s) + 1."""
    if n_samples < window + horizon:
        return 0
    return (n_samples - window - horizon) // stride + 1


def build_pretext(
    record: SignalRecord,
    window: int = DEFAULT_WINDOW,
    horizon: int = DEFAULT_HORIZON,
    stride: int = DEFAULT_STRIDE,
    tags: tuple[str, ...] | None = None,
) -> WindowedDataset:
    """Slice the signal into overlapping (input, forecast-target) pairs.

    By default windows slide over the full recording.  When ``tags`` is
    given, windows slide within each condition span carrying one of those
    tags instead, and never cross a span boundary.
    """
    _check_geometry(window=window, stride=stride, horizon=horizon)
    samples = record.samples
    n = len(samples)
    if n < window + horizon:
        raise EmptyDatasetError(
            f"signal of {n} samples is shorter than window+horizon = {window + horizon}"
        )
    if tags is None:
        regions = [(0, n)]
    else:
        wanted = set(tags)
        regions = [
            (start, end)
            for tag, start, end in sorted(record.condition_spans, key=lambda s: s[1])
            if tag in wanted
        ]
        if not regions:
            raise EmptyDatasetError(
                f"subject {record.subject_id!r} has no condition span tagged "
                + "/".join(sorted(wanted))
            )
    examples = []
    for lo, hi in regions:
        for start in range(lo, hi - window - horizon + 1, stride):
            examples.append(
                PretextExample(
                    input=samples[start : start + window],
                    target=samples[start + window : start + window + horizon],
                    start_index=start,
                )
            )
    if not examples:
        raise EmptyDatasetError(
            f"no selected span of subject {record.subject_id!r} fits "
            f"window+horizon = {window + horizon}"
        )
    return WindowedDataset(
        examples, Provenance(record.subject_id, "pretext", window, horizon, stride)
    )


def build_downstream(
    record: SignalRecord,
    labels: LabelSet,
    question_index: int,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> WindowedDataset:
    """Slice labeled condition spans into (input, stress-label) examples.

    Windows never cross a span boundary, so each carries exactly one label:
    the subject's normalized answer for (span condition, question_index).
    Spans without a label for this question are skipped.
    """
    _check_geometry(window=window, stride=stride)
    if question_index not in (1, 2, 3, 4, 5, 6):
        raise ConfigError(f"question index must be in 1..6, got {question_index}")
    samples = record.samples
    examples = []
    for tag, span_start, span_end in sorted(record.condition_spans, key=lambda s: s[1]):
        entry = labels.get(tag, question_index)
        if entry is None:
            continue
        for start in range(span_start, span_end - window + 1, stride):
            examples.append(
                DownstreamExample(
                    input=samples[start : start + window],
                    label=entry.normalized,
                    question_index=question_index,
                    condition_tag=tag,
                    start_index=start,
                )
            )
    if not examples:
        raise EmptyDatasetError(
            f"no labeled span of subject {record.subject_id!r} is long enough for window {window}"
        )
    return WindowedDataset(
        examples, Provenance(record.subject_id, "downstream", window, 0, stride)
    )


def sample_budget(dataset: WindowedDataset, budget: int, seed: int) -> WindowedDataset:
    """Uniform sample of ``budget`` examples without replacement.

    A pure function of (dataset, budget, seed): the same seed always picks
    the same subset, which is what lets the ssl and scratch arms of an
    experiment train on identical windows.
    """
    if budget <= 0:
        raise ConfigError(f"budget must be positive, got {budget}")
    n = len(dataset)
    if budget > n:
        raise InsufficientDataError(f"budget {budget} exceeds {n} available examples")
    order = derive_rng(seed, "sample-budget").permutation(n)[:budget]
    return dataset.subset(order)


def _check_geometry(window: int, stride: int, horizon: int | None = None) -> None:
    if window <= 0:
        raise ConfigError(f"window must be positive, got {window}")
    if stride <= 0:
        raise ConfigError(f"stride must be positive, got {stride}")
    if horizon is not None and horizon <= 0:
        raise ConfigError(f"horizon must be positive, got {horizon}")
