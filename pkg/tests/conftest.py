"""Shared fixtures plus the per-criterion summary for the acceptance suite."""

import numpy as np
import pytest

from eda_personalize import kernels
from eda_personalize.signal_store import LabelSet, SignalRecord

# Heavy training tests pin the numpy kernels: on this class of hardware the
# BLAS-backed path is the faster one, and a fixed backend keeps every
# training trajectory bit-reproducible across the whole run.  Cross-backend
# agreement is covered explicitly in test_kernels.py.
@pytest.fixture(scope="session", autouse=True)
def _pinned_backend():
    previous = kernels.active_backend()
    kernels.set_backend("numpy")
    yield
    kernels.set_backend(previous)


@pytest.fixture
def sine_record():
    """4000 samples of a clean two-tone signal, one labeled span."""
    t = np.arange(4000) / 700.0
    wave = 0.5 + 0.2 * np.sin(2 * np.pi * 0.7 * t) + 0.1 * np.sin(2 * np.pi * 1.63 * t)
    return SignalRecord("SYN", 700, wave.astype(np.float32), (("baseline", 0, 4000),))


@pytest.fixture
def syn_labels():
    labels = LabelSet("SYN")
    labels.add("baseline", 1, 2)
    labels.add("baseline", 2, 4)
    labels.add("stress", 1, 3)
    return labels


# --------------------------------------------------------- acceptance report

# display label for each test in tests/test_acceptance.py, in print order
_CRITERIA = [
    ("test_gradients_match_finite_differences", "gradient correctness vs finite differences"),
    ("test_window_construction_matches_bruteforce", "sliding-window construction vs brute force"),
    ("test_finetune_preserves_transferred_conv_weights", "conv stack bit-frozen through fine-tuning"),
    ("test_likert_normalization_exact", "likert-to-normalized label mapping"),
    ("test_overfit_small_labeled_set", "both model kinds overfit a 10-example set"),
    ("test_pretrained_features_win_at_low_budget", "label efficiency of pretrained features"),
    ("test_wesad_bands", "converted-dataset RMSE and win-rate bands"),
    ("test_experiment_rerun_byte_identical", "end-to-end experiment determinism"),
]

_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    if report.when == "call":
        _outcomes[name] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    elif report.when == "setup":
        if report.skipped:
            _outcomes[name] = "SKIP"
        elif report.failed:
            _outcomes[name] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    seen = [(name, label) for name, label in _CRITERIA if name in _outcomes]
    if not seen:
        return
    terminalreporter.section("acceptance criteria")
    for name, label in seen:
        terminalreporter.write_line(f"{label + ' ':.<52} {_outcomes[name]}")
