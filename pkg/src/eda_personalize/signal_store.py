"""Raw EDA signal records, their on-disk format, labels, and scaling.

EDA1 binary layout (all integers little-endian):

    magic            4 bytes, b"EDA1"
    format version   u16, currently 1
    subject id       u16 length + that many UTF-8 bytes
    sample_rate_hz   u32
    span count       u32
    spans            span count x (tag u8, start u64, end u64)
    sample count     u64
    samples          sample count x IEEE-754 binary32

Span ``end`` is exclusive, so a span covering the whole signal has
``end == len(samples)``. Condition tags map to u8 codes via
:data:`TAG_TO_CODE`. Sample values are stored bit-exactly as 32-bit floats.

Label CSVs carry the header ``subject_id,condition,question,likert,normalized``
with one row per (condition, STAI question) pair.
"""

from __future__ import annotations

import csv
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateSignalError, FormatError, SpanError

FORMAT_MAGIC = b"EDA1"
FORMAT_VERSION = 1

CONDITION_TAGS = ("baseline", "stress", "amusement", "meditation", "other")
TAG_TO_CODE = {tag: code for code, tag in enumerate(CONDITION_TAGS)}
CODE_TO_TAG = {code: tag for tag, code in TAG_TO_CODE.items()}

LABEL_CSV_HEADER = ["subject_id", "condition", "question", "likert", "normalized"]

QUESTION_INDICES = (1, 2, 3, 4, 5, 6)
LIKERT_VALUES = (1, 2, 3, 4)


@dataclass
class SignalRecord:
    """One subject's raw EDA trace plus condition annotations.

    ``samples`` is held as a read-only float32 array; records are safe to
    share across threads once constructed.
    """

    subject_id: str
    sample_rate_hz: int
    samples: np.ndarray
    condition_spans: tuple[tuple[str, int, int], ...] = ()

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float32)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(
            self,
            "condition_spans",
            tuple((str(t), int(s), int(e)) for t, s, e in self.condition_spans),
        )

    def validate(self) -> None:
        """Raise if any invariant is violated."""
        if not self.subject_id:
            raise DataError("subject_id must be non-empty")
        if self.sample_rate_hz <= 0:
            raise DataError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        n = len(self.samples)
        if n == 0:
            raise DataError("samples must be non-empty")
        finite = np.isfinite(self.samples)
        if not finite.all():
            idx = int(np.argmin(finite))
            raise DataError(f"non-finite sample at index {idx}")
        for tag, start, end in self.condition_spans:
            if tag not in TAG_TO_CODE:
                raise SpanError(f"unknown condition tag {tag!r}")
            if not (0 <= start < end <= n):
                raise SpanError(f"span ({tag}, {start}, {end}) out of range for {n} samples")
        ordered = sorted(self.condition_spans, key=lambda s: s[1])
        for (t1, s1, e1), (t2, s2, e2) in zip(ordered, ordered[1:]):
            if s2 < e1:
                raise SpanError(f"spans ({t1}, {s1}, {e1}) and ({t2}, {s2}, {e2}) overlap")

    def spans_for(self, tag: str) -> list[tuple[int, int]]:
        return [(s, e) for t, s, e in self.condition_spans if t == tag]


@dataclass(frozen=True)
class LabelEntry:
    likert: int
    normalized: float


@dataclass
class LabelSet:
    """Per-subject STAI answers, keyed by (condition tag, question index)."""

    subject_id: str
    entries: dict[tuple[str, int], LabelEntry] = field(default_factory=dict)

    @staticmethod
    def normalize_likert(likert: int) -> float:
        """Map a 4-point Likert answer onto {0.25, 0.5, 0.75, 1.0}."""
        if likert not in LIKERT_VALUES:
            raise DataError(f"likert value must be in 1..4, got {likert}")
        return likert / 4

    def add(self, condition: str, question: int, likert: int) -> None:
        if condition not in TAG_TO_CODE:
            raise DataError(f"unknown condition tag {condition!r}")
        if question not in QUESTION_INDICES:
            raise DataError(f"question index must be in 1..6, got {question}")
        self.entries[(condition, question)] = LabelEntry(likert, self.normalize_likert(likert))

    def get(self, condition: str, question: int) -> LabelEntry | None:
        return self.entries.get((condition, question))

    def validate(self) -> None:
        for (condition, question), entry in self.entries.items():
            if condition not in TAG_TO_CODE:
                raise DataError(f"unknown condition tag {condition!r}")
            if question not in QUESTION_INDICES:
                raise DataError(f"question index must be in 1..6, got {question}")
            if entry.likert not in LIKERT_VALUES:
                raise DataError(f"likert value must be in 1..4, got {entry.likert}")
            if entry.normalized != entry.likert / 4:
                raise DataError(
                    f"normalized {entry.normalized} != likert/4 for ({condition}, {question})"
                )


@dataclass(frozen=True)
class NormalizationParams:
    """Affine scaling fit on pretraining data only.

    minmax: param_a/param_b are the signal min/max; zscore: mean and
    population standard deviation; none: identity (0, 1).
    """

    method: str
    param_a: float
    param_b: float

    def __post_init__(self):
        if self.method not in ("none", "minmax", "zscore"):
            raise DataError(f"unknown normalization method {self.method!r}")
        if self.method == "minmax" and not self.param_b > self.param_a:
            raise DegenerateSignalError("minmax requires max > min")
        if self.method == "zscore" and not self.param_b > 0:
            raise DegenerateSignalError("zscore requires std > 0")

    def to_dict(self) -> dict:
        return {"method": self.method, "param_a": self.param_a, "param_b": self.param_b}

    @classmethod
    def from_dict(cls, doc: dict) -> "NormalizationParams":
        try:
            return cls(doc["method"], float(doc["param_a"]), float(doc["param_b"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed normalization parameters: {doc!r}") from exc


def fit_normalization(record: SignalRecord, method: str = "minmax") -> NormalizationParams:
    """Compute scaling parameters over the record's full sample array."""
    if method == "none":
        return NormalizationParams("none", 0.0, 1.0)
    samples = record.samples.astype(np.float64)
    if method == "minmax":
        lo, hi = float(samples.min()), float(samples.max())
        if not hi > lo:
            raise DegenerateSignalError("constant signal cannot be minmax-normalized")
        return NormalizationParams("minmax", lo, hi)
    if method == "zscore":
        mean = float(samples.mean())
        std = float(samples.std())  # population std
        if not std > 0:
            raise DegenerateSignalError("constant signal cannot be zscore-normalized")
        return NormalizationParams("zscore", mean, std)
    raise DataError(f"unknown normalization method {method!r}")


def apply_normalization(record: SignalRecord, params: NormalizationParams) -> SignalRecord:
    """Return a copy of the record with scaled samples; metadata unchanged."""
    if params.method == "none":
        return replace(record)
    x = record.samples.astype(np.float64)
    if params.method == "minmax":
        scaled = (x - params.param_a) / (params.param_b - params.param_a)
    else:
        scaled = (x - params.param_a) / params.param_b
    if not np.isfinite(scaled).all():
        raise DataError("normalization produced non-finite values")
    return replace(record, samples=scaled.astype(np.float32))


def save_signal(record: SignalRecord, path: str | Path) -> None:
    """Write an EDA1 file; validates first and writes atomically."""
    record.validate()
    subject = record.subject_id.encode("utf-8")
    if len(subject) > 0xFFFF:
        raise FormatError("subject id too long for EDA1 header")
    parts = [
        struct.pack("<4sH", FORMAT_MAGIC, FORMAT_VERSION),
        struct.pack("<H", len(subject)),
        subject,
        struct.pack("<I", record.sample_rate_hz),
        struct.pack("<I", len(record.condition_spans)),
    ]
    for tag, start, end in record.condition_spans:
        parts.append(struct.pack("<BQQ", TAG_TO_CODE[tag], start, end))
    parts.append(struct.pack("<Q", len(record.samples)))
    parts.append(record.samples.astype("<f4").tobytes())
    _atomic_write(path, b"".join(parts))


def load_signal(path: str | Path) -> SignalRecord:
    """Read and validate an EDA1 file."""
    blob = Path(path).read_bytes()
    view = memoryview(blob)
    off = 0

    def take(fmt: str):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(view):
            raise FormatError(f"{path}: truncated header at byte {off}")
        values = struct.unpack_from(fmt, view, off)
        off += size
        return values

    magic, version = take("<4sH")
    if magic != FORMAT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    (id_len,) = take("<H")
    if off + id_len > len(view):
        raise FormatError(f"{path}: truncated subject id")
    subject_id = bytes(view[off : off + id_len]).decode("utf-8")
    off += id_len
    (sample_rate,) = take("<I")
    (span_count,) = take("<I")
    spans = []
    for _ in range(span_count):
        code, start, end = take("<BQQ")
        if code not in CODE_TO_TAG:
            raise FormatError(f"{path}: unknown span tag code {code}")
        spans.append((CODE_TO_TAG[code], start, end))
    (count,) = take("<Q")
    payload = len(view) - off
    if payload != count * 4:
        raise FormatError(
            f"{path}: header declares {count} samples ({count * 4} bytes) but payload has {payload} bytes"
        )
    samples = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
    record = SignalRecord(subject_id, sample_rate, samples, tuple(spans))
    record.validate()
    return record


def save_labels(labels, path: str | Path) -> None:
    """Write labels as CSV (sorted for reproducible bytes).

    ``labels`` is one LabelSet, an iterable of them, or a mapping of
    subject id to LabelSet; subjects are written in sorted order.
    """
    if isinstance(labels, LabelSet):
        sets = [labels]
    elif isinstance(labels, dict):
        sets = [labels[k] for k in sorted(labels)]
    else:
        sets = sorted(labels, key=lambda s: s.subject_id)
    rows = []
    for label_set in sets:
        label_set.validate()
        for (condition, question), entry in sorted(
            label_set.entries.items(), key=lambda kv: (TAG_TO_CODE[kv[0][0]], kv[0][1])
        ):
            rows.append(
                [label_set.subject_id, condition, question, entry.likert, entry.normalized]
            )
    buf = []
    buf.append(",".join(LABEL_CSV_HEADER))
    for row in rows:
        buf.append(",".join(str(v) for v in row))
    _atomic_write(path, ("\n".join(buf) + "\n").encode("utf-8"))


def load_labels(path: str | Path) -> dict[str, LabelSet]:
    """Read a labels CSV, grouping rows by subject id."""
    out: dict[str, LabelSet] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header != LABEL_CSV_HEADER:
            raise FormatError(f"{path}: expected header {','.join(LABEL_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise FormatError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            subject, condition, question, likert, normalized = row
            labels = out.setdefault(subject, LabelSet(subject))
            labels.add(condition, int(question), int(likert))
            declared = float(normalized)
            stored = labels.entries[(condition, int(question))].normalized
            if not math.isclose(declared, stored, rel_tol=0, abs_tol=1e-12):
                raise DataError(
                    f"{path}:{lineno}: normalized column {declared} disagrees with likert/4 = {stored}"
                )
    for labels in out.values():
        labels.validate()
    return out


def _atomic_write(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
