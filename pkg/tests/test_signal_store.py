"""Binary signal format, label CSVs, and normalization."""

import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eda_personalize.errors import (
    DataError,
    DegenerateSignalError,
    FormatError,
    SpanError,
)
from eda_personalize.signal_store import (
    CONDITION_TAGS,
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


def _record(samples, spans=(), subject="S2", rate=700):
    return SignalRecord(subject, rate, np.asarray(samples, dtype=np.float32), spans)


# ----------------------------------------------------------------- binary IO


def test_file_bytes_match_hand_packed_layout(tmp_path):
    # Oracle: the exact byte string assembled with struct, independently of
    # the writer under test.
    samples = np.array([1.5, -2.25, 0.125], dtype=np.float32)
    record = _record(samples, (("baseline", 0, 2), ("stress", 2, 3)))
    path = tmp_path / "s.eda1"
    save_signal(record, path)

    expected = b"EDA1"
    expected += struct.pack("<H", 1)
    expected += struct.pack("<H", 2) + b"S2"
    expected += struct.pack("<I", 700)
    expected += struct.pack("<I", 2)
    expected += struct.pack("<BQQ", 0, 0, 2)  # baseline
    expected += struct.pack("<BQQ", 1, 2, 3)  # stress
    expected += struct.pack("<Q", 3)
    expected += samples.tobytes()
    assert path.read_bytes() == expected


def test_hand_packed_file_loads(tmp_path):
    blob = (
        b"EDA1"
        + struct.pack("<H", 1)
        + struct.pack("<H", 3)
        + "Sß".encode("utf-8")
        + struct.pack("<I", 4)
        + struct.pack("<I", 1)
        + struct.pack("<BQQ", 4, 0, 2)  # "other"
        + struct.pack("<Q", 2)
        + np.array([0.5, 0.75], dtype="<f4").tobytes()
    )
    path = tmp_path / "hand.eda1"
    path.write_bytes(blob)
    record = load_signal(path)
    assert record.subject_id == "Sß"
    assert record.sample_rate_hz == 4
    assert record.condition_spans == (("other", 0, 2),)
    assert np.array_equal(record.samples, np.array([0.5, 0.75], dtype=np.float32))


@settings(max_examples=30, deadline=None)
@given(
    samples=st.lists(
        st.floats(min_value=-1e6, max_value=1e6, width=32), min_size=1, max_size=200
    ),
    subject=st.text(min_size=1, max_size=12),
    rate=st.integers(min_value=1, max_value=10_000),
)
def test_roundtrip_bit_exact(tmp_path_factory, samples, subject, rate):
    record = _record(samples, subject=subject, rate=rate)
    n = len(record.samples)
    if n >= 2:
        record = _record(samples, (("baseline", 0, n // 2), ("stress", n // 2, n)), subject, rate)
    path = tmp_path_factory.mktemp("rt") / "x.eda1"
    save_signal(record, path)
    loaded = load_signal(path)
    assert loaded.subject_id == record.subject_id
    assert loaded.sample_rate_hz == record.sample_rate_hz
    assert loaded.condition_spans == record.condition_spans
    assert loaded.samples.tobytes() == record.samples.tobytes()


def test_load_rejects_corruption(tmp_path):
    record = _record([1.0, 2.0, 3.0], (("baseline", 0, 3),))
    path = tmp_path / "good.eda1"
    save_signal(record, path)
    blob = path.read_bytes()

    bad_magic = tmp_path / "magic.eda1"
    bad_magic.write_bytes(b"XDA1" + blob[4:])
    with pytest.raises(FormatError):
        load_signal(bad_magic)

    bad_version = tmp_path / "version.eda1"
    bad_version.write_bytes(blob[:4] + struct.pack("<H", 9) + blob[6:])
    with pytest.raises(FormatError):
        load_signal(bad_version)

    truncated = tmp_path / "trunc.eda1"
    truncated.write_bytes(blob[:-2])
    with pytest.raises(FormatError):
        load_signal(truncated)

    padded = tmp_path / "padded.eda1"
    padded.write_bytes(blob + b"\x00\x00\x00\x00")
    with pytest.raises(FormatError):
        load_signal(padded)


def test_validate_rejects_bad_records():
    with pytest.raises(DataError):
        _record([1.0], subject="").validate()
    with pytest.raises(DataError):
        _record([1.0], rate=0).validate()
    with pytest.raises(DataError):
        _record([1.0, float("nan")]).validate()
    with pytest.raises(SpanError):
        _record([1.0, 2.0], (("baseline", 0, 3),)).validate()
    with pytest.raises(SpanError):
        _record([1.0, 2.0], (("mystery", 0, 1),)).validate()
    with pytest.raises(SpanError):
        _record([1.0] * 10, (("baseline", 0, 5), ("stress", 4, 8))).validate()
    # adjacent spans touch without overlapping: allowed
    _record([1.0] * 10, (("baseline", 0, 5), ("stress", 5, 10))).validate()


def test_samples_are_readonly():
    record = _record([1.0, 2.0])
    with pytest.raises(ValueError):
        record.samples[0] = 9.0


# -------------------------------------------------------------------- labels


def test_likert_mapping_is_exact():
    assert [LabelSet.normalize_likert(v) for v in (1, 2, 3, 4)] == [0.25, 0.5, 0.75, 1.0]
    with pytest.raises(DataError):
        LabelSet.normalize_likert(0)
    with pytest.raises(DataError):
        LabelSet.normalize_likert(5)


@given(st.lists(st.tuples(
    st.sampled_from(CONDITION_TAGS),
    st.integers(min_value=1, max_value=6),
    st.integers(min_value=1, max_value=4),
), min_size=1, max_size=30))
def test_every_entry_satisfies_quarter_mapping(items):
    labels = LabelSet("SX")
    for condition, question, likert in items:
        labels.add(condition, question, likert)
    labels.validate()
    for entry in labels.entries.values():
        assert entry.normalized == entry.likert / 4
        assert entry.normalized in (0.25, 0.5, 0.75, 1.0)


def test_labels_csv_roundtrip(tmp_path):
    a = LabelSet("S2")
    a.add("baseline", 1, 2)
    a.add("stress", 1, 4)
    b = LabelSet("S10")
    b.add("amusement", 3, 1)
    path = tmp_path / "labels.csv"
    save_labels({"S2": a, "S10": b}, path)

    text = path.read_text()
    assert text.splitlines()[0] == "subject_id,condition,question,likert,normalized"
    loaded = load_labels(path)
    assert set(loaded) == {"S2", "S10"}
    assert loaded["S2"].get("stress", 1).normalized == 1.0
    assert loaded["S10"].get("amusement", 3).likert == 1


def test_labels_csv_rows_sorted_for_stable_bytes(tmp_path):
    one = LabelSet("S2")
    one.add("stress", 2, 3)
    one.add("baseline", 1, 1)
    one.add("baseline", 2, 2)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    save_labels(one, p1)

    other = LabelSet("S2")  # same content, inserted in another order
    other.add("baseline", 2, 2)
    other.add("baseline", 1, 1)
    other.add("stress", 2, 3)
    save_labels(other, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_labels_rejects_mismatched_normalized_column(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text(
        "subject_id,condition,question,likert,normalized\nS2,baseline,1,2,0.9\n"
    )
    with pytest.raises(DataError):
        load_labels(path)


def test_load_labels_rejects_wrong_header(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(FormatError):
        load_labels(path)


def test_load_labels_skips_comment_lines(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text(
        "# tool=x seed=0\nsubject_id,condition,question,likert,normalized\nS2,baseline,1,2,0.5\n"
    )
    assert load_labels(path)["S2"].get("baseline", 1).likert == 2


# ------------------------------------------------------------- normalization


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=-1e5, max_value=1e5, width=32), min_size=2, max_size=300))
def test_minmax_lands_on_unit_interval(values):
    record = _record(values)
    if float(record.samples.max()) == float(record.samples.min()):
        return  # constant signals are covered below
    scaled = apply_normalization(record, fit_normalization(record, "minmax"))
    lo, hi = float(scaled.samples.min()), float(scaled.samples.max())
    ulp = float(np.finfo(np.float32).eps)
    assert abs(lo - 0.0) <= ulp
    assert abs(hi - 1.0) <= ulp


def test_zscore_centers_and_scales():
    record = _record(np.arange(100, dtype=np.float32))
    scaled = apply_normalization(record, fit_normalization(record, "zscore"))
    mean = float(scaled.samples.astype(np.float64).mean())
    std = float(scaled.samples.astype(np.float64).std())
    assert math.isclose(mean, 0.0, abs_tol=1e-6)
    assert math.isclose(std, 1.0, rel_tol=1e-6)


def test_none_is_identity():
    record = _record([3.0, -1.0])
    scaled = apply_normalization(record, fit_normalization(record, "none"))
    assert np.array_equal(scaled.samples, record.samples)


def test_constant_signal_is_degenerate():
    record = _record([2.0] * 10)
    with pytest.raises(DegenerateSignalError):
        fit_normalization(record, "minmax")
    with pytest.raises(DegenerateSignalError):
        fit_normalization(record, "zscore")
    apply_normalization(record, fit_normalization(record, "none"))  # fine


def test_params_dict_roundtrip():
    params = NormalizationParams("minmax", 0.25, 4.0)
    again = NormalizationParams.from_dict(params.to_dict())
    assert again == params
    with pytest.raises(DataError):
        NormalizationParams.from_dict({"method": "minmax"})
    with pytest.raises(DataError):
        NormalizationParams("sigmoid", 0.0, 1.0)


def test_normalization_preserves_metadata():
    record = _record(np.arange(10), (("baseline", 0, 10),))
    scaled = apply_normalization(record, fit_normalization(record, "minmax"))
    assert scaled.subject_id == record.subject_id
    assert scaled.sample_rate_hz == record.sample_rate_hz
    assert scaled.condition_spans == record.condition_spans
