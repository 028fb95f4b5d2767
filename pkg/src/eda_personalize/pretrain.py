"""Per-subject self-supervised pretraining on the forecasting pretext task.

Each subject gets their own model, trained to predict the 40 samples that
follow a 7000-sample window of their own normalized EDA signal.  Forecast
quality is reported as RMSE on a chronologically-last holdout slice that
never enters training, so overlapping windows cannot leak future samples
into the score.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import InsufficientDataError
from .nn import (
    Checkpoint,
    evaluate_rmse,
    init_checkpoint,
    make_optimizer,
    pretext_spec,
    save_checkpoint,
    train,
)
from .rng import derive_seed
from .signal_store import SignalRecord, apply_normalization, fit_normalization
from .windowing import DEFAULT_HORIZON, DEFAULT_STRIDE, DEFAULT_WINDOW, build_pretext

REPORT_COLUMNS = ("subject_id", "pretext_rmse", "examples_used", "holdout_fraction")


@dataclass(frozen=True)
class PretrainConfig:
    """Knobs for one pretraining run; defaults follow the package-wide ones."""

    window: int = DEFAULT_WINDOW
    horizon: int = DEFAULT_HORIZON
    stride: int = DEFAULT_STRIDE
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    holdout_fraction: float = 0.1
    normalization: str = "minmax"
    baseline_only: bool = False

    def hyperparameters(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PretrainReport:
    """Forecasting quality of one subject's pretext model."""

    subject_id: str
    pretext_rmse: float
    examples_used: int
    holdout_fraction: float
    hyperparameters: dict = field(default_factory=dict)


def pretrain(record: SignalRecord, config: PretrainConfig = PretrainConfig()):
    """Train a forecasting model on one subject's signal.

    Returns ``(checkpoint, report)``.  The signal is normalized first
    (per ``config.normalization``) and the fitted scaling parameters are
    stored in the checkpoint's training metadata so downstream fine-tuning
    can scale its windows identically.

    Forecast windows slide over the whole recording by default; setting
    ``config.baseline_only`` restricts them to baseline-tagged condition
    spans (normalization is still fit on the full signal either way, so the
    stored scaling parameters do not depend on the flag).
    """
    params = fit_normalization(record, config.normalization)
    scaled = apply_normalization(record, params)
    tags = ("baseline",) if config.baseline_only else None
    dataset = build_pretext(scaled, config.window, config.horizon, config.stride, tags=tags)
    n = len(dataset)
    if n < 2:
        raise InsufficientDataError(
            f"subject {record.subject_id!r} yields {n} pretext example(s); need at least 2 "
            "to keep a holdout slice"
        )
    n_holdout = max(1, round(n * config.holdout_fraction))
    if n_holdout >= n:
        n_holdout = n - 1
    train_set = dataset.subset(range(n - n_holdout))
    holdout = dataset.subset(range(n - n_holdout, n))

    spec = pretext_spec(window=config.window, horizon=config.horizon)
    checkpoint = init_checkpoint(spec, derive_seed(config.seed, "pretrain-init", record.subject_id))
    optimizer = make_optimizer("adam", config.learning_rate)
    fitted = train(
        checkpoint,
        train_set,
        optimizer,
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=derive_seed(config.seed, "pretrain-train", record.subject_id),
    )
    fitted.training_meta.update(
        {
            "subject_id": record.subject_id,
            "normalization": params.to_dict(),
            "pretext": True,
            "hyperparameters": config.hyperparameters(),
        }
    )
    report = PretrainReport(
        subject_id=record.subject_id,
        pretext_rmse=evaluate_rmse(fitted, holdout),
        examples_used=len(train_set),
        holdout_fraction=config.holdout_fraction,
        hyperparameters=config.hyperparameters(),
    )
    return fitted, report


def pretrain_all(
    records,
    config: PretrainConfig = PretrainConfig(),
    checkpoint_dir: str | Path | None = None,
    report_path: str | Path | None = None,
    metadata: dict | None = None,
):
    """Pretrain every subject independently.

    Returns ``(reports, failures)`` where ``failures`` maps a subject id to
    the error message that stopped it; other subjects still complete.  When
    ``checkpoint_dir`` is given each checkpoint lands in
    ``<dir>/<subject>.pretext.json``; ``report_path`` collects the report
    rows as CSV.
    """
    reports: list[PretrainReport] = []
    failures: dict[str, str] = {}
    for record in records:
        try:
            checkpoint, report = pretrain(record, config)
        except Exception as exc:  # record and continue with the other subjects
            failures[record.subject_id] = f"{type(exc).__name__}: {exc}"
            continue
        reports.append(report)
        if checkpoint_dir is not None:
            directory = Path(checkpoint_dir)
            directory.mkdir(parents=True, exist_ok=True)
            save_checkpoint(checkpoint, directory / f"{record.subject_id}.pretext.json")
    if report_path is not None:
        write_pretrain_reports(reports, report_path, metadata=metadata)
    return reports, failures


def write_pretrain_reports(reports, path: str | Path, metadata: dict | None = None) -> None:
    """Write report rows as CSV; ``metadata`` becomes a leading '#' comment."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        if metadata:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in sorted(metadata.items())) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for report in reports:
            writer.writerow(
                [
                    report.subject_id,
                    report.pretext_rmse,
                    report.examples_used,
                    report.holdout_fraction,
                ]
            )
