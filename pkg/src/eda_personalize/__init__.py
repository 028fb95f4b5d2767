"""Per-subject stress-signal personalization for wearable EDA recordings.

The package pretrains a small convolutional forecaster on a subject's raw
electrodermal activity, then transfers its frozen convolutional features to
a regression head that predicts the subject's normalized stress-question
answers from ten-second windows.  Everything is deterministic given a seed
and a fixed kernel backend (see eda_personalize.kernels).
"""

from . import kernels, nn
from .experiment import (
    CrossoverEntry,
    ExperimentConfig,
    ExperimentResult,
    emit_report,
    label_efficiency,
    run_comparison,
    split_test_remainder,
    stability,
    win_rate,
)
from .finetune import (
    METHOD_SCRATCH,
    METHOD_SSL,
    FinetuneConfig,
    FitResult,
    StressPrediction,
    TransferPlan,
    build_finetune_model,
    fit,
    predict_stress,
    scratch_model,
)
from .pretrain import PretrainConfig, PretrainReport, pretrain, pretrain_all
from .errors import (
    ConfigError,
    ConsistencyError,
    DataError,
    DegenerateSignalError,
    DivergenceError,
    EdaError,
    EmptyDatasetError,
    FormatError,
    InsufficientDataError,
    ShapeError,
    SpanError,
)
from .rng import derive_rng, derive_seed, subset_fingerprint
from .signal_store import (
    CONDITION_TAGS,
    LabelEntry,
    LabelSet,
    NormalizationParams,
    SignalRecord,
    apply_normalization,
    fit_normalization,
    load_labels,
    load_signal,
    save_labels,
    save_signal,
)
from .windowing import (
    DEFAULT_HORIZON,
    DEFAULT_STRIDE,
    DEFAULT_WINDOW,
    DownstreamExample,
    PretextExample,
    WindowedDataset,
    build_downstream,
    build_pretext,
    pretext_example_count,
    sample_budget,
)

__version__ = "0.1.0"
