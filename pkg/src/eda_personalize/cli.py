"""Command-line entry point.

Subcommands mirror the pipeline: validate and normalize signal files,
inspect windowing, pretrain a subject's forecaster, fine-tune or train the
stress regressor, run the paired comparison experiment, and re-analyze a
results file.  Every artifact written here embeds the tool version, the
base seed, and a hash of the effective configuration, so outputs are
traceable to the invocation that produced them.

Exit codes: 0 success, 1 operational failure (bad data, failed cells),
2 usage errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .errors import EdaError
from .experiment import (
    RESULT_COLUMNS,
    ExperimentConfig,
    ExperimentResult,
    emit_report,
    label_efficiency,
    load_config,
    run_comparison,
    split_test_remainder,
    stability,
    win_rate,
)
from .finetune import METHOD_SCRATCH, METHOD_SSL, FinetuneConfig, FitResult, fit
from .nn import load_checkpoint, save_checkpoint
from .pretrain import PretrainConfig, pretrain, write_pretrain_reports
from .rng import derive_seed
from .signal_store import (
    NormalizationParams,
    apply_normalization,
    fit_normalization,
    load_labels,
    load_signal,
    save_signal,
)
from .windowing import (
    DEFAULT_HORIZON,
    DEFAULT_STRIDE,
    DEFAULT_WINDOW,
    build_downstream,
    build_pretext,
    sample_budget,
)


def _config_hash(args: argparse.Namespace) -> str:
    """Hash of the effective configuration (every resolved argument)."""
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    blob = json.dumps(resolved, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _artifact_metadata(args: argparse.Namespace) -> dict:
    return {
        "tool": f"eda-personalize/{__version__}",
        "seed": getattr(args, "seed", 0),
        "config_sha256": _config_hash(args),
    }


def _log(args, level: int, message: str) -> None:
    if args.verbose >= level:
        print(message, file=sys.stderr)


def _load_normalized_for(pretext_ckpt, record):
    meta = pretext_ckpt.training_meta.get("normalization")
    if meta:
        return apply_normalization(record, NormalizationParams.from_dict(meta))
    return record


# ----------------------------------------------------------------- commands


def _cmd_validate(args) -> int:
    record = load_signal(args.file)
    spans = ", ".join(f"{tag}[{a}:{b}]" for tag, a, b in record.condition_spans) or "none"
    print(
        f"{args.file}: subject {record.subject_id}, {len(record.samples)} samples "
        f"@ {record.sample_rate_hz} Hz, spans: {spans}"
    )
    return 0


def _cmd_normalize(args) -> int:
    record = load_signal(args.input)
    params = fit_normalization(record, args.method)
    save_signal(apply_normalization(record, params), args.out)
    _log(args, 1, f"normalized {args.input} with {params.method} ({params.param_a}, {params.param_b})")
    return 0


def _cmd_windows(args) -> int:
    record = load_signal(args.signal)
    if args.mode == "pretext":
        dataset = build_pretext(record, args.window, args.horizon, args.stride)
    else:
        if not args.labels or args.question is None:
            raise EdaError("downstream windows need --labels and --question")
        labels = load_labels(args.labels)
        if record.subject_id not in labels:
            raise EdaError(f"no labels for subject {record.subject_id!r} in {args.labels}")
        dataset = build_downstream(record, labels[record.subject_id], args.question, args.window, args.stride)
    prov = dataset.provenance
    print(
        f"{prov.kind}: {len(dataset)} examples (window {prov.window}, "
        f"horizon {prov.horizon}, stride {prov.stride}) for subject {prov.subject_id}"
    )
    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in sorted(_artifact_metadata(args).items())) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            if args.mode == "pretext":
                writer.writerow(["start_index"])
                writer.writerows([ex.start_index] for ex in dataset.examples)
            else:
                writer.writerow(["start_index", "condition", "question", "label"])
                writer.writerows(
                    [ex.start_index, ex.condition_tag, ex.question_index, ex.label]
                    for ex in dataset.examples
                )
        _log(args, 1, f"wrote window index to {args.dump}")
    return 0


def _cmd_pretrain(args) -> int:
    record = load_signal(args.signal)
    config = PretrainConfig(
        window=args.window,
        horizon=args.horizon,
        stride=args.stride,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
        holdout_fraction=args.holdout,
        normalization=args.normalization,
        baseline_only=args.baseline_only,
    )
    checkpoint, report = pretrain(record, config)
    for epoch, loss in enumerate(checkpoint.training_meta.get("epoch_losses", [])):
        _log(args, 1, f"epoch {epoch}: loss {loss:.6f}")
    checkpoint.training_meta["artifact"] = _artifact_metadata(args)
    save_checkpoint(checkpoint, args.out)
    if args.report:
        write_pretrain_reports([report], args.report, metadata=_artifact_metadata(args))
    print(
        f"subject {report.subject_id}: pretext RMSE {report.pretext_rmse:.6f} "
        f"({report.examples_used} training examples, holdout {report.holdout_fraction})"
    )
    return 0


def _append_result_row(path: Path, row: FitResult, metadata: dict) -> None:
    new_file = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new_file:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in sorted(metadata.items())) + "\n")
            writer.writerow(RESULT_COLUMNS)
        writer.writerow(
            [
                row.subject_id,
                row.question_index,
                row.method,
                row.budget,
                row.replica,
                repr(row.train_rmse),
                repr(row.test_rmse),
                row.replica_seed,
            ]
        )


def _cmd_fit(args, method: str) -> int:
    pretext_ckpt = load_checkpoint(args.pretext)
    record = _load_normalized_for(pretext_ckpt, load_signal(args.signal))
    labels = load_labels(args.labels)
    if record.subject_id not in labels:
        raise EdaError(f"no labels for subject {record.subject_id!r} in {args.labels}")
    dataset = build_downstream(
        record, labels[record.subject_id], args.question, args.window, args.stride
    )
    subject = record.subject_id
    test_set, pool = split_test_remainder(
        dataset, args.test_size, derive_seed(args.seed, "test-reserve", subject, args.question)
    )
    train_set = sample_budget(
        pool, args.budget, derive_seed(args.seed, "budget", subject, args.question, args.budget, args.replica)
    )
    config = FinetuneConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=derive_seed(args.seed, "fit", subject, args.question, args.budget, args.replica),
    )
    result = fit(method, train_set, test_set, config, pretext=pretext_ckpt)
    result.replica = args.replica
    for epoch, loss in enumerate(result.model.training_meta.get("epoch_losses", [])):
        _log(args, 1, f"epoch {epoch}: loss {loss:.6f}")
    if args.results:
        _append_result_row(Path(args.results), result, _artifact_metadata(args))
    if args.save_model:
        result.model.training_meta["artifact"] = _artifact_metadata(args)
        save_checkpoint(result.model, args.save_model)
    print(
        f"{method}: subject {subject} q{args.question} budget {args.budget} replica {args.replica} "
        f"train RMSE {result.train_rmse:.6f} test RMSE {result.test_rmse:.6f}"
    )
    return 0


def _cmd_experiment(args) -> int:
    config = load_config(args.config)
    if args.jobs is not None:
        config = ExperimentConfig(**{**_config_as_kwargs(config), "jobs": args.jobs})
    data_dir = Path(args.data)
    labels = load_labels(data_dir / "labels.csv")
    records = {}
    for path in sorted(data_dir.glob("*.eda1")):
        record = load_signal(path)
        records[record.subject_id] = record
    checkpoints = {}
    ckpt_dir = Path(args.checkpoints) if args.checkpoints else data_dir
    for path in sorted(ckpt_dir.glob("*.pretext.json")):
        ckpt = load_checkpoint(path)
        subject = ckpt.training_meta.get("subject_id") or path.name.split(".")[0]
        checkpoints[subject] = ckpt
    result = run_comparison(config, records, labels, checkpoints)
    metadata = dict(_artifact_metadata(args))
    metadata["seed"] = config.seed
    metadata["config_sha256"] = hashlib.sha256(Path(args.config).read_bytes()).hexdigest()[:16]
    paths = emit_report(result, args.out, metadata=metadata)
    _log(args, 1, f"wrote {', '.join(str(p) for p in paths)}")
    print(f"{len(result.rows)} rows over {len(result.rows) // 2 if result.rows else 0} paired cells")
    for subject, question, error in result.failures:
        print(f"failed: subject {subject} q{question}: {error}", file=sys.stderr)
    return 1 if result.failures else 0


def _config_as_kwargs(config: ExperimentConfig) -> dict:
    from dataclasses import asdict

    return asdict(config)


def _cmd_report(args) -> int:
    result = read_results_csv(args.results)
    print(f"rows: {len(result.rows)}")
    if not result.rows:
        return 0
    overall = win_rate(result)
    print(f"win rate (all budgets): {overall:.4f}")
    budgets = sorted({r.budget for r in result.rows})
    for budget in budgets:
        print(f"win rate at budget {budget}: {win_rate(result, budget):.4f}")
    if len(budgets) >= 2:
        table = label_efficiency(result)
        for (subject, question), entry in sorted(table.items()):
            cross = entry.crossover_budget if entry.crossover_budget is not None else "never"
            print(
                f"label efficiency: subject {subject} q{question}: crossover {cross} "
                f"(ratio {entry.ratio}, scratch reference {entry.scratch_reference:.6f})"
            )
    stab = stability(result)
    stable = sum(1 for v in stab.values() if v["ssl_more_stable"])
    print(f"stability: ssl spread <= scratch spread in {stable}/{len(stab)} cells")
    if args.out:
        paths = emit_report(result, args.out, metadata=_artifact_metadata(args))
        _log(args, 1, f"wrote {', '.join(str(p) for p in paths)}")
    return 0


def read_results_csv(path: str | Path) -> ExperimentResult:
    """Rebuild an ExperimentResult from a results.csv written by this tool.

    Subset fingerprints are not stored in the CSV, so rebuilt rows carry
    empty fingerprints (pairing by cell is still checked).
    """
    rows: list[FitResult] = []
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != list(RESULT_COLUMNS):
        raise EdaError(f"{path}: unexpected results header {header}")
    for raw in reader:
        subject, question, method, budget, replica, train_rmse, test_rmse, seed = raw
        rows.append(
            FitResult(
                model=None,
                method=method,
                question_index=int(question),
                subject_id=subject,
                train_rmse=float(train_rmse),
                test_rmse=float(test_rmse),
                budget=int(budget),
                replica_seed=int(seed),
                replica=int(replica),
            )
        )
    budgets = tuple(sorted({r.budget for r in rows})) or (1,)
    questions = tuple(sorted({r.question_index for r in rows})) or (1,)
    replicas = max((r.replica for r in rows), default=0) + 1
    config = ExperimentConfig(
        subjects=tuple(sorted({r.subject_id for r in rows})),
        questions=questions,
        budgets=budgets,
        replicas=replicas,
    )
    return ExperimentResult(rows=rows, config=config)


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eda-personalize",
        description="Per-subject self-supervised stress personalization for EDA signals.",
    )
    parser.add_argument("--version", action="version", version=f"eda-personalize {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="base seed for every derived stream")
        p.add_argument("-v", "--verbose", action="count", default=0)

    p = sub.add_parser("validate", help="check an EDA1 signal file")
    common(p)
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("normalize", help="rescale a signal file")
    common(p)
    p.add_argument("--method", choices=("none", "minmax", "zscore"), default="minmax")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("windows", help="count or dump training windows")
    common(p)
    p.add_argument("--signal", required=True)
    p.add_argument("--mode", choices=("pretext", "downstream"), required=True)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    p.add_argument("--question", type=int)
    p.add_argument("--labels")
    p.add_argument("--dump", help="write a start-index CSV instead of materializing windows")
    p.set_defaults(func=_cmd_windows)

    p = sub.add_parser("pretrain", help="self-supervised pretraining for one subject")
    common(p)
    p.add_argument("--signal", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--report", help="write a one-row report CSV here")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    p.add_argument("--normalization", choices=("none", "minmax", "zscore"), default="minmax")
    p.add_argument(
        "--baseline-only",
        action="store_true",
        help="restrict forecast windows to baseline-tagged condition spans",
    )
    p.set_defaults(func=_cmd_pretrain)

    def fit_parser(name, help_):
        q = sub.add_parser(name, help=help_)
        common(q)
        q.add_argument("--pretext", required=True, help="pretext checkpoint")
        q.add_argument("--signal", required=True)
        q.add_argument("--labels", required=True)
        q.add_argument("--question", type=int, required=True)
        q.add_argument("--budget", type=int, required=True)
        q.add_argument("--replica", type=int, default=0)
        q.add_argument("--test-size", type=int, default=200)
        q.add_argument("--epochs", type=int, default=60)
        q.add_argument("--batch-size", type=int, default=32)
        q.add_argument("--lr", type=float, default=1e-3)
        q.add_argument("--window", type=int, default=DEFAULT_WINDOW)
        q.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
        q.add_argument("--results", help="results CSV to append to")
        q.add_argument("--save-model", help="write the fitted checkpoint here")
        return q

    fit_parser("finetune", "transfer + freeze conv stack, train the head").set_defaults(
        func=lambda a: _cmd_fit(a, METHOD_SSL)
    )
    fit_parser("baseline", "train the identical architecture from scratch").set_defaults(
        func=lambda a: _cmd_fit(a, METHOD_SCRATCH)
    )

    p = sub.add_parser("experiment", help="paired comparison over budgets and replicas")
    common(p)
    p.add_argument("--config", required=True, help="key=value experiment config file")
    p.add_argument("--data", required=True, help="directory with <subject>.eda1 and labels.csv")
    p.add_argument("--checkpoints", help="directory with <subject>.pretext.json (default: --data)")
    p.add_argument("--out", required=True, help="output directory for the three report CSVs")
    p.add_argument("--jobs", type=int, help="parallel (subject, question) groups")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("report", help="re-analyze a results CSV")
    common(p)
    p.add_argument("--results", required=True)
    p.add_argument("--out", help="also re-emit report files into this directory")
    p.set_defaults(func=_cmd_report)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except EdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
