"""Readers for one WESAD subject directory.

Each subject ``SX`` ships as ``SX/SX.pkl`` (a Python-2-era pickle holding the
synchronized sensor arrays and the per-sample protocol-condition track) plus
``SX/SX_quest.csv`` (semicolon-delimited questionnaire answers).  Only the
chest-device EDA channel and the six-item state-anxiety answers are read;
everything else in the archive is ignored.

Unpickling executes whatever the file encodes, so feed this module only
archives obtained from the dataset distribution itself.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np

from .errors import ConversionError

#: Samples per second of the chest-worn device; every channel in the archive
#: is resampled to this rate by the dataset authors.
SAMPLE_RATE_HZ = 700

#: Number of state-anxiety items administered after every condition.
QUESTIONS_PER_CONDITION = 6


def read_recording(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Load the chest EDA trace and the per-sample condition-code track.

    Returns ``(samples, codes)``: samples as a 1-D float32 array in recording
    order, codes as a 1-D integer array (empty when the archive has no
    condition track).
    """
    path = Path(path)
    if not path.is_file():
        raise ConversionError(f"{path}: archive not found")
    try:
        with open(path, "rb") as fh:
            blob = pickle.load(fh, encoding="latin1")
    except (pickle.UnpicklingError, EOFError, AttributeError, ImportError) as exc:
        raise ConversionError(f"{path}: cannot unpickle archive ({exc})") from exc
    try:
        eda = blob["signal"]["chest"]["EDA"]
    except (KeyError, TypeError, IndexError):
        raise ConversionError(f"{path}: chest EDA channel missing") from None
    samples = np.asarray(eda, dtype=np.float32).reshape(-1)
    if samples.size == 0:
        raise ConversionError(f"{path}: chest EDA channel is empty")
    label_track = blob.get("label", ()) if isinstance(blob, dict) else ()
    codes = np.asarray(label_track, dtype=np.int64).reshape(-1)
    return samples, codes


def read_questionnaire(path: str | Path) -> tuple[list[str], list[list[int]]]:
    """Parse the questionnaire file into condition blocks and their answers.

    The file is semicolon-delimited; the row whose first cell is ``# ORDER``
    names the condition blocks in administration order, and each ``# STAI``
    row carries the six 4-point answers for the corresponding block.  All
    other questionnaire sections are ignored.

    Returns ``(order, answers)`` with one six-item answer list per block.
    """
    path = Path(path)
    if not path.is_file():
        raise ConversionError(f"{path}: questionnaire not found")
    order: list[str] | None = None
    answer_rows: list[list[int]] = []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            cells = [cell.strip() for cell in raw.split(";")]
            head = cells[0].lstrip("#").strip().upper()
            values = [cell for cell in cells[1:] if cell]
            if head == "ORDER":
                order = values
            elif head == "STAI":
                answer_rows.append(_parse_answers(values, path, lineno))
    if order is None:
        raise ConversionError(f"{path}: no ORDER row names the condition blocks")
    if len(answer_rows) != len(order):
        raise ConversionError(
            f"{path}: {len(answer_rows)} answer row(s) for {len(order)} condition block(s)"
        )
    return order, answer_rows


def _parse_answers(cells: list[str], path: Path, lineno: int) -> list[int]:
    if len(cells) != QUESTIONS_PER_CONDITION:
        raise ConversionError(
            f"{path}:{lineno}: expected {QUESTIONS_PER_CONDITION} answers, got {len(cells)}"
        )
    answers = []
    for cell in cells:
        try:
            value = float(cell)
        except ValueError:
            raise ConversionError(f"{path}:{lineno}: answer {cell!r} is not a number") from None
        if not value.is_integer() or not 1 <= value <= 4:
            raise ConversionError(
                f"{path}:{lineno}: answer {cell!r} outside the 4-point scale 1..4"
            )
        answers.append(int(value))
    return answers
