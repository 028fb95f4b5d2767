"""Writers for the interchange formats the converter emits.

EDA1 signal files are little-endian binary: magic ``EDA1``, format version
(u16, currently 1), subject-id length (u16) + UTF-8 bytes, sample rate in Hz
(u32), span count (u32), spans as (condition code u8, start u64, end u64;
end exclusive), sample count (u64), then the samples as 32-bit IEEE-754
floats.  Label files are CSV with header
``subject_id,condition,question,likert,normalized`` where ``normalized`` is
always ``likert/4``.

This module is deliberately self-contained — the byte layout above is the
whole contract with downstream consumers.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

FORMAT_MAGIC = b"EDA1"
FORMAT_VERSION = 1

#: Condition tags in their on-disk code order: index == u8 span code.
CONDITION_TAGS = ("baseline", "stress", "amusement", "meditation", "other")
TAG_TO_CODE = {tag: code for code, tag in enumerate(CONDITION_TAGS)}

LABEL_CSV_HEADER = ("subject_id", "condition", "question", "likert", "normalized")


def write_signal(
    path: str | Path,
    subject_id: str,
    sample_rate_hz: int,
    samples: np.ndarray,
    spans: list[tuple[str, int, int]],
) -> int:
    """Write one subject's EDA1 file; returns the sample count."""
    data = np.ascontiguousarray(np.asarray(samples, dtype="<f4").reshape(-1))
    sid = subject_id.encode("utf-8")
    parts = [
        struct.pack("<4sH", FORMAT_MAGIC, FORMAT_VERSION),
        struct.pack("<H", len(sid)),
        sid,
        struct.pack("<I", sample_rate_hz),
        struct.pack("<I", len(spans)),
    ]
    for tag, start, end in spans:
        parts.append(struct.pack("<BQQ", TAG_TO_CODE[tag], int(start), int(end)))
    parts.append(struct.pack("<Q", data.size))
    parts.append(data.tobytes())
    _atomic_write(path, b"".join(parts))
    return int(data.size)


def write_labels(path: str | Path, subject_id: str, answers: dict[tuple[str, int], int]) -> None:
    """Write one subject's label CSV.

    ``answers`` maps (condition tag, question index 1..6) to the raw 4-point
    answer; rows come out sorted by condition code then question so reruns
    are byte-identical.
    """
    lines = [",".join(LABEL_CSV_HEADER)]
    for (tag, question), likert in sorted(
        answers.items(), key=lambda kv: (TAG_TO_CODE[kv[0][0]], kv[0][1])
    ):
        lines.append(f"{subject_id},{tag},{question},{likert},{likert / 4}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def merge_labels(per_subject_paths: list[Path], out_path: str | Path) -> None:
    """Concatenate per-subject label CSVs into one file with a single header."""
    header = ",".join(LABEL_CSV_HEADER)
    lines = [header]
    for path in per_subject_paths:
        body = Path(path).read_text(encoding="utf-8").splitlines()
        if not body or body[0] != header:
            raise ValueError(f"{path}: not a label CSV (bad header)")
        lines.extend(body[1:])
    _atomic_write(out_path, ("\n".join(lines) + "\n").encode("utf-8"))


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
