"""Paired ssl-vs-scratch comparisons over label budgets, subjects, questions.

One experiment *cell* is a (subject, question, budget, replica) tuple.  For
each cell the harness samples one training subset — shared verbatim by
both methods — fits the transfer model and the scratch model on it, and
scores both on a test set that was reserved before any budget sampling.
Everything derives from the base seed, so a rerun writes byte-identical
files.
"""

from __future__ import annotations

import csv
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConsistencyError, InsufficientDataError
from .finetune import METHOD_SCRATCH, METHOD_SSL, FinetuneConfig, FitResult, fit
from .nn import Checkpoint
from .rng import derive_rng, derive_seed
from .signal_store import LabelSet, NormalizationParams, SignalRecord, apply_normalization
from .windowing import DEFAULT_STRIDE, DEFAULT_WINDOW, WindowedDataset, build_downstream

RESULT_COLUMNS = ("subject", "question", "method", "budget", "replica", "train_rmse", "test_rmse", "seed")
AGGREGATE_COLUMNS = ("subject", "question", "budget", "method", "mean_test_rmse", "std_test_rmse", "replicas")
PLOT_COLUMNS = ("question", "budget", "method", "mean_test_rmse", "std_test_rmse")

DEFAULT_BUDGETS = (5, 10, 20, 40, 80)
DEFAULT_QUESTIONS = (1, 2, 3, 4, 5, 6)


@dataclass(frozen=True)
class ExperimentConfig:
    subjects: tuple[str, ...] = ()
    questions: tuple[int, ...] = DEFAULT_QUESTIONS
    budgets: tuple[int, ...] = DEFAULT_BUDGETS
    replicas: int = 5
    seed: int = 0
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE
    test_size: int = 200
    epochs: int = 60
    batch_size: int = 32
    learning_rate: float = 1e-3
    jobs: int = 1

    def __post_init__(self):
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if not self.budgets or any(b <= 0 for b in self.budgets):
            raise ConfigError(f"budgets must be positive, got {self.budgets}")
        if list(self.budgets) != sorted(set(self.budgets)):
            raise ConfigError(f"budgets must be strictly ascending, got {self.budgets}")
        if any(q not in DEFAULT_QUESTIONS for q in self.questions):
            raise ConfigError(f"questions must be within 1..6, got {self.questions}")


_INT_KEYS = ("replicas", "seed", "window", "stride", "test_size", "epochs", "batch_size", "jobs")


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the experiment's key=value config format.

    One ``key = value`` pair per line; ``#`` starts a comment; lists are
    comma-separated.  Recognized keys: subjects, questions, budgets,
    replicas, seed, window, stride, test_size, epochs, batch_size,
    learning_rate, jobs.  Unknown keys are errors so typos never silently
    fall back to defaults.
    """
    fields_: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key == "subjects":
                fields_[key] = tuple(s.strip() for s in value.split(",") if s.strip())
            elif key in ("questions", "budgets"):
                fields_[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key in _INT_KEYS:
                fields_[key] = int(value)
            elif key == "learning_rate":
                fields_[key] = float(value)
            else:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"config line {lineno}: bad value for {key}: {value!r}") from exc
    return ExperimentConfig(**fields_)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


@dataclass
class ExperimentResult:
    rows: list[FitResult] = field(default_factory=list)
    failures: list[tuple[str, int, str]] = field(default_factory=list)  # subject, question, error
    config: ExperimentConfig | None = None

    def sorted_rows(self) -> list[FitResult]:
        return sorted(
            self.rows,
            key=lambda r: (r.subject_id, r.question_index, r.budget, r.replica, r.method),
        )

    def validate_pairing(self) -> None:
        """Every cell must hold exactly one ssl and one scratch row that
        trained on identical windows (same subset fingerprint)."""
        cells: dict[tuple, dict[str, FitResult]] = {}
        for row in self.rows:
            key = (row.subject_id, row.question_index, row.budget, row.replica)
            bucket = cells.setdefault(key, {})
            if row.method in bucket:
                raise ConsistencyError(f"duplicate {row.method} row for cell {key}")
            bucket[row.method] = row
        for key, bucket in cells.items():
            if set(bucket) != set((METHOD_SSL, METHOD_SCRATCH)):
                raise ConsistencyError(f"cell {key} is missing a method: has {sorted(bucket)}")
            ssl_row, scratch_row = bucket[METHOD_SSL], bucket[METHOD_SCRATCH]
            if ssl_row.train_fingerprint != scratch_row.train_fingerprint:
                raise ConsistencyError(
                    f"cell {key} trained methods on different subsets: "
                    f"{ssl_row.train_fingerprint} vs {scratch_row.train_fingerprint}"
                )

    def aggregates(self) -> dict[tuple, tuple[float, float, int]]:
        """(subject, question, budget, method) -> (mean, std, n) of test RMSE.

        Standard deviation across replicas is the sample estimate (ddof=1);
        a single replica reports nan.
        """
        groups: dict[tuple, list[float]] = {}
        for row in self.rows:
            key = (row.subject_id, row.question_index, row.budget, row.method)
            groups.setdefault(key, []).append(row.test_rmse)
        out = {}
        for key, values in groups.items():
            arr = np.asarray(values, dtype=np.float64)
            std = float(np.std(arr, ddof=1)) if arr.size > 1 else float("nan")
            out[key] = (float(arr.mean()), std, int(arr.size))
        return out


def _stratified_test_indices(dataset: WindowedDataset, size: int, seed: int) -> list[int]:
    """Reserve test windows proportionally across condition tags.

    Sampling uses its own derived stream so the reservation is identical no
    matter which budgets or replicas run afterwards.  Largest-remainder
    allocation keeps the per-tag proportions as close as integers allow.
    """
    by_tag: dict[str, list[int]] = {}
    for i, example in enumerate(dataset.examples):
        by_tag.setdefault(example.condition_tag, []).append(i)
    n = len(dataset)
    size = min(size, n)
    tags = sorted(by_tag)
    exact = {tag: size * len(by_tag[tag]) / n for tag in tags}
    counts = {tag: int(exact[tag]) for tag in tags}
    leftovers = sorted(tags, key=lambda t: (-(exact[t] - counts[t]), t))
    for tag in leftovers:
        if sum(counts.values()) == size:
            break
        if counts[tag] < len(by_tag[tag]):
            counts[tag] += 1
    chosen: list[int] = []
    for tag in tags:
        pool = by_tag[tag]
        take = min(counts[tag], len(pool))
        order = derive_rng(seed, "test-split", tag).permutation(len(pool))[:take]
        chosen.extend(pool[i] for i in order)
    return sorted(chosen)


def split_test_remainder(dataset: WindowedDataset, test_size: int, seed: int):
    """(test_set, remainder_set): the reserved evaluation windows and the
    pool that budget sampling may draw from."""
    test_idx = _stratified_test_indices(dataset, test_size, seed)
    test_mask = set(test_idx)
    rest = [i for i in range(len(dataset)) if i not in test_mask]
    return dataset.subset(test_idx), dataset.subset(rest)


def _run_group(args):
    """All cells of one (subject, question): test split, budgets, replicas."""
    (config, subject, question, record, labels, pretext) = args
    meta = pretext.training_meta.get("normalization")
    if meta:
        record = apply_normalization(record, NormalizationParams.from_dict(meta))
    dataset = build_downstream(record, labels, question, config.window, config.stride)
    test_seed = derive_seed(config.seed, "test-reserve", subject, question)
    test_set, pool = split_test_remainder(dataset, config.test_size, test_seed)
    if len(pool) < max(config.budgets):
        raise InsufficientDataError(
            f"subject {subject} question {question}: {len(pool)} windows remain after "
            f"test reservation; largest budget is {max(config.budgets)}"
        )
    rows = []
    for budget in config.budgets:
        for replica in range(config.replicas):
            subset_seed = derive_seed(config.seed, "budget", subject, question, budget, replica)
            train_set = _sample_pool(pool, budget, subset_seed)
            fit_config = FinetuneConfig(
                epochs=config.epochs,
                batch_size=config.batch_size,
                learning_rate=config.learning_rate,
                seed=derive_seed(config.seed, "fit", subject, question, budget, replica),
            )
            for method in (METHOD_SSL, METHOD_SCRATCH):
                result = fit(method, train_set, test_set, fit_config, pretext=pretext)
                # keep result rows light: the fitted model itself is dropped
                rows.append(replace(result, model=None, replica=replica))
    return rows


def _sample_pool(pool: WindowedDataset, budget: int, seed: int) -> WindowedDataset:
    from .windowing import sample_budget

    return sample_budget(pool, budget, seed)


def run_comparison(
    config: ExperimentConfig,
    records: dict[str, SignalRecord],
    labels: dict[str, LabelSet],
    pretext: dict[str, Checkpoint],
) -> ExperimentResult:
    """Fit both methods over every cell; failures are recorded, not fatal.

    ``records`` holds each subject's raw signal; it is normalized here with
    the scaling stored in that subject's pretext checkpoint so downstream
    windows are scaled exactly as pretraining windows were.
    """
    subjects = config.subjects or tuple(sorted(records))
    result = ExperimentResult(config=config)
    groups = []
    for subject in subjects:
        for question in config.questions:
            if subject not in records or subject not in labels:
                result.failures.append((subject, question, "missing signal or labels"))
                continue
            if subject not in pretext:
                result.failures.append((subject, question, "missing pretext checkpoint"))
                continue
            groups.append(
                (config, subject, question, records[subject], labels[subject], pretext[subject])
            )

    if config.jobs > 1 and len(groups) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_run_group_safe, groups))
    else:
        outcomes = [_run_group_safe(g) for g in groups]
    for (args, (rows, error)) in zip(groups, outcomes):
        if error is not None:
            result.failures.append((args[1], args[2], error))
        else:
            result.rows.extend(rows)
    result.failures.sort()
    result.validate_pairing()
    return result


def _run_group_safe(args):
    try:
        return _run_group(args), None
    except Exception as exc:
        return [], f"{type(exc).__name__}: {exc}"


def win_rate(result: ExperimentResult, budget: int | None = None) -> float:
    """Fraction of paired cells where ssl beats scratch on test RMSE.

    Strictly lower wins; ties count against ssl.  With ``budget`` given,
    only that budget's cells participate.
    """
    result.validate_pairing()
    pairs: dict[tuple, dict[str, float]] = {}
    for row in result.rows:
        if budget is not None and row.budget != budget:
            continue
        key = (row.subject_id, row.question_index, row.budget, row.replica)
        pairs.setdefault(key, {})[row.method] = row.test_rmse
    if not pairs:
        raise ConsistencyError("no paired rows to compare" + (f" at budget {budget}" if budget else ""))
    wins = sum(1 for p in pairs.values() if p[METHOD_SSL] < p[METHOD_SCRATCH])
    return wins / len(pairs)


@dataclass(frozen=True)
class CrossoverEntry:
    subject: str
    question: int
    crossover_budget: int | None
    ratio: float  # crossover budget / largest budget; inf when never reached
    scratch_reference: float  # scratch mean test RMSE at the largest budget


def label_efficiency(result: ExperimentResult) -> dict[tuple[str, int], CrossoverEntry]:
    """Smallest ssl budget matching scratch-at-max, per (subject, question).

    The scratch reference is the scratch method's mean test RMSE at the
    largest budget; the entry reports the first (smallest) ssl budget whose
    mean test RMSE is <= that reference, as a ratio to the largest budget.
    A cell that never crosses gets ratio infinity.
    """
    config = result.config
    budgets = tuple(config.budgets) if config else ()
    if len(budgets) < 2:
        raise ConfigError("label efficiency needs at least two budgets in ascending order")
    if list(budgets) != sorted(set(budgets)):
        raise ConfigError(f"budgets must be strictly ascending, got {budgets}")
    aggregates = result.aggregates()
    largest = budgets[-1]
    out: dict[tuple[str, int], CrossoverEntry] = {}
    cells = sorted({(r.subject_id, r.question_index) for r in result.rows})
    for subject, question in cells:
        reference = aggregates.get((subject, question, largest, METHOD_SCRATCH))
        if reference is None:
            raise ConsistencyError(
                f"cell ({subject}, q{question}) has no scratch rows at budget {largest}"
            )
        crossover = None
        for budget in budgets:
            ssl_agg = aggregates.get((subject, question, budget, METHOD_SSL))
            if ssl_agg is not None and ssl_agg[0] <= reference[0]:
                crossover = budget
                break
        out[(subject, question)] = CrossoverEntry(
            subject=subject,
            question=question,
            crossover_budget=crossover,
            ratio=(crossover / largest) if crossover is not None else float("inf"),
            scratch_reference=reference[0],
        )
    return out


def stability(result: ExperimentResult) -> dict[tuple[str, int, int], dict]:
    """Replica-to-replica spread per cell and method.

    Values carry the sample standard deviation (ddof=1) of test RMSE for
    each method plus ``ssl_more_stable`` = (ssl std <= scratch std).
    """
    aggregates = result.aggregates()
    out: dict[tuple[str, int, int], dict] = {}
    for subject, question, budget, method in aggregates:
        out.setdefault((subject, question, budget), {})
    for key in out:
        subject, question, budget = key
        ssl_std = aggregates.get((subject, question, budget, METHOD_SSL), (float("nan"),) * 3)[1]
        scratch_std = aggregates.get((subject, question, budget, METHOD_SCRATCH), (float("nan"),) * 3)[1]
        out[key] = {
            "ssl_std": ssl_std,
            "scratch_std": scratch_std,
            "ssl_more_stable": bool(ssl_std <= scratch_std),
        }
    return out


def _atomic_writer(path: Path):
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", prefix=f".{path.name}.")
    return fd, tmp


def _write_csv(path: Path, header, rows, metadata: dict | None) -> None:
    fd, tmp = _atomic_writer(path)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            if metadata:
                fh.write("# " + " ".join(f"{k}={v}" for k, v in sorted(metadata.items())) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(result: ExperimentResult, out_dir: str | Path, metadata: dict | None = None):
    """Write results.csv, aggregates.csv, and plot_data.csv under ``out_dir``.

    Rows are fully sorted and floats written via repr, so identical results
    always produce byte-identical files.  Returns the three paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results_path = out_dir / "results.csv"
    rows = [
        [
            r.subject_id,
            r.question_index,
            r.method,
            r.budget,
            r.replica,
            repr(r.train_rmse),
            repr(r.test_rmse),
            r.replica_seed,
        ]
        for r in result.sorted_rows()
    ]
    _write_csv(results_path, RESULT_COLUMNS, rows, metadata)

    aggregates = result.aggregates()
    agg_rows = [
        [subject, question, budget, method, repr(values[0]), repr(values[1]), values[2]]
        for (subject, question, budget, method), values in sorted(aggregates.items())
    ]
    aggregates_path = out_dir / "aggregates.csv"
    _write_csv(aggregates_path, AGGREGATE_COLUMNS, agg_rows, metadata)

    by_question: dict[tuple, list[float]] = {}
    for row in result.rows:
        by_question.setdefault((row.question_index, row.budget, row.method), []).append(row.test_rmse)
    plot_rows = []
    for (question, budget, method), values in sorted(by_question.items()):
        arr = np.asarray(values, dtype=np.float64)
        std = float(np.std(arr, ddof=1)) if arr.size > 1 else float("nan")
        plot_rows.append([question, budget, method, repr(float(arr.mean())), repr(std)])
    plot_path = out_dir / "plot_data.csv"
    _write_csv(plot_path, PLOT_COLUMNS, plot_rows, metadata)

    return results_path, aggregates_path, plot_path
