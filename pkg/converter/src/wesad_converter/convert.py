"""Per-subject conversion and the batch driver with its manifest.

One subject converts to two files: ``<subject>.eda1`` (the chest EDA trace
with condition spans recovered from the archive's per-sample protocol codes)
and ``<subject>.labels.csv`` (six state-anxiety answers per condition,
normalized to answer/4).  The batch driver additionally merges every
subject's labels into ``labels.csv`` — the single-file layout downstream
tools read — and records what happened per subject in ``manifest.csv``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .archive import SAMPLE_RATE_HZ, read_questionnaire, read_recording
from .errors import ConversionError
from .output import merge_labels, write_labels, write_signal

#: The dataset's fifteen subjects: S2 through S17 with S12 absent from the
#: public distribution.
WESAD_SUBJECTS = tuple(f"S{i}" for i in range(2, 18) if i != 12)

#: Protocol codes that carry a study condition.
CODE_TO_TAG = {1: "baseline", 2: "stress", 3: "amusement", 4: "meditation"}

#: Codes the protocol defines but that name no condition (transient periods
#: and post-condition questionnaire/recovery phases); they map to ``other``
#: without a warning.
UNLABELED_CODES = frozenset({0, 5, 6, 7})

MANIFEST_COLUMNS = ("subject_id", "status", "eda1_path", "labels_path", "sample_count", "detail")


@dataclass(frozen=True)
class SubjectOutput:
    """Manifest entry for one successfully converted subject."""

    subject_id: str
    eda1_path: Path
    labels_path: Path
    sample_count: int
    warnings: tuple[str, ...] = ()


@dataclass
class ConversionManifest:
    """What a conversion run consumed and produced."""

    source_dir: Path
    subjects: tuple[str, ...]
    outputs: list[SubjectOutput] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        """Raise if any recorded output is missing or empty."""
        for entry in self.outputs:
            for path in (entry.eda1_path, entry.labels_path):
                if not Path(path).is_file():
                    raise ConversionError(f"manifest lists missing file {path}")
            if entry.sample_count <= 0:
                raise ConversionError(
                    f"subject {entry.subject_id}: sample_count must be positive, "
                    f"got {entry.sample_count}"
                )

    def write_csv(self, path: str | Path) -> None:
        """One row per requested subject, successes first in request order."""
        out_dir = Path(path).parent
        by_subject = {entry.subject_id: entry for entry in self.outputs}
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(MANIFEST_COLUMNS)
            for subject_id in self.subjects:
                entry = by_subject.get(subject_id)
                if entry is not None:
                    writer.writerow(
                        [
                            subject_id,
                            "ok",
                            _relative_to(entry.eda1_path, out_dir),
                            _relative_to(entry.labels_path, out_dir),
                            entry.sample_count,
                            " | ".join(entry.warnings),
                        ]
                    )
                elif subject_id in self.failures:
                    writer.writerow([subject_id, "failed", "", "", "", self.failures[subject_id]])


def _relative_to(path: Path, base: Path) -> str:
    try:
        return str(Path(path).relative_to(base))
    except ValueError:
        return str(path)


def spans_from_codes(codes: np.ndarray) -> tuple[list[tuple[str, int, int]], list[str]]:
    """Turn the per-sample condition-code track into condition spans.

    Every maximal run of one code becomes one span (end exclusive).  Codes
    without a condition map to ``other``; a code outside the protocol's
    documented range additionally produces a warning.
    """
    codes = np.asarray(codes).reshape(-1)
    if codes.size == 0:
        return [], []
    changes = np.flatnonzero(np.diff(codes)) + 1
    starts = np.concatenate(([0], changes))
    ends = np.concatenate((changes, [codes.size]))
    spans: list[tuple[str, int, int]] = []
    warnings: list[str] = []
    warned: set[int] = set()
    for start, end in zip(starts, ends):
        code = int(codes[start])
        tag = CODE_TO_TAG.get(code)
        if tag is None:
            tag = "other"
            if code not in UNLABELED_CODES and code not in warned:
                warned.add(code)
                warnings.append(f"unknown condition code {code} mapped to 'other'")
        spans.append((tag, int(start), int(end)))
    return spans, warnings


def answers_from_questionnaire(
    order: list[str], answer_rows: list[list[int]]
) -> tuple[dict[tuple[str, int], int], list[str]]:
    """Map questionnaire blocks to (condition tag, question) -> answer.

    Blocks whose name matches no condition are skipped with a warning, as is
    any repeat administration of a condition (the first block wins — the
    protocol administers meditation twice).
    """
    answers: dict[tuple[str, int], int] = {}
    warnings: list[str] = []
    seen: set[str] = set()
    for block, row in zip(order, answer_rows):
        tag = _condition_tag(block)
        if tag is None:
            warnings.append(f"questionnaire block {block!r}: unknown condition, skipped")
            continue
        if tag in seen:
            warnings.append(
                f"questionnaire block {block!r}: repeat administration of {tag!r}, "
                "first block kept"
            )
            continue
        seen.add(tag)
        for question, likert in enumerate(row, start=1):
            answers[(tag, question)] = likert
    return answers, warnings


def _condition_tag(block_name: str) -> str | None:
    name = block_name.strip().lower()
    if name.startswith("base"):
        return "baseline"
    if name.startswith("tsst"):
        return "stress"
    if name.startswith("fun"):
        return "amusement"
    if name.startswith("medi"):
        return "meditation"
    return None


def convert_subject(source: str | Path, subject_id: str, out_dir: str | Path) -> SubjectOutput:
    """Convert one subject directory; returns its manifest entry.

    Writes ``<subject>.eda1`` (sample rate 700 Hz, all samples in recording
    order) and ``<subject>.labels.csv`` (one row per condition and question).
    """
    source = Path(source)
    out_dir = Path(out_dir)
    subject_dir = source / subject_id
    samples, codes = read_recording(subject_dir / f"{subject_id}.pkl")
    order, answer_rows = read_questionnaire(subject_dir / f"{subject_id}_quest.csv")

    warnings: list[str] = []
    if codes.size == 0:
        warnings.append("archive has no condition track; no spans emitted")
    elif codes.size != samples.size:
        warnings.append(
            f"condition track has {codes.size} entries for {samples.size} samples; "
            "spans cover the overlap only"
        )
        codes = codes[: samples.size]
    spans, span_warnings = spans_from_codes(codes)
    answers, label_warnings = answers_from_questionnaire(order, answer_rows)
    warnings.extend(span_warnings)
    warnings.extend(label_warnings)

    out_dir.mkdir(parents=True, exist_ok=True)
    eda1_path = out_dir / f"{subject_id}.eda1"
    labels_path = out_dir / f"{subject_id}.labels.csv"
    sample_count = write_signal(eda1_path, subject_id, SAMPLE_RATE_HZ, samples, spans)
    write_labels(labels_path, subject_id, answers)
    return SubjectOutput(subject_id, eda1_path, labels_path, sample_count, tuple(warnings))


def convert_all(
    source: str | Path,
    out_dir: str | Path,
    subjects: tuple[str, ...] = WESAD_SUBJECTS,
    manifest_path: str | Path | None = None,
) -> ConversionManifest:
    """Convert every requested subject, tolerating per-subject failures.

    Also writes the merged ``labels.csv`` and the run manifest (default
    ``<out_dir>/manifest.csv``).  Inspect ``manifest.failures`` — the batch
    never raises for one bad subject.
    """
    source = Path(source)
    out_dir = Path(out_dir)
    manifest = ConversionManifest(source_dir=source, subjects=tuple(subjects))
    for subject_id in manifest.subjects:
        try:
            manifest.outputs.append(convert_subject(source, subject_id, out_dir))
        except Exception as exc:  # record and continue with the other subjects
            manifest.failures[subject_id] = f"{type(exc).__name__}: {exc}"
    out_dir.mkdir(parents=True, exist_ok=True)
    if manifest.outputs:
        merge_labels([entry.labels_path for entry in manifest.outputs], out_dir / "labels.csv")
    manifest.validate()
    manifest.write_csv(manifest_path if manifest_path is not None else out_dir / "manifest.csv")
    return manifest
