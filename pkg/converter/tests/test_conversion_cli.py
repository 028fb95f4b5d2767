"""The wesad-convert command line: exit codes, output, determinism."""

import subprocess
import sys
from pathlib import Path

import pytest

from wesad_converter import __version__
from wesad_converter.cli import main
from fixture_archive import make_archive


def test_successful_run_exits_zero(source_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--src", str(source_dir), "--out", str(out), "--subjects", "S2"]) == 0
    stdout = capsys.readouterr().out
    assert "S2: ok (10 samples)" in stdout
    assert "converted 1/1 subject(s)" in stdout
    assert (out / "S2.eda1").is_file()
    assert (out / "S2.labels.csv").is_file()
    assert (out / "labels.csv").is_file()
    assert (out / "manifest.csv").is_file()


def test_partial_failure_exits_one(source_dir, tmp_path, capsys):
    broken = make_archive(source_dir, subject_id="S3")
    (broken / "S3.pkl").unlink()
    code = main(["--src", str(source_dir), "--out", str(tmp_path / "out"), "--subjects", "S2,S3"])
    assert code == 1
    captured = capsys.readouterr()
    assert "S2: ok" in captured.out
    assert "S3: FAILED" in captured.err
    assert "archive not found" in captured.err


def test_verbose_prints_warnings(source_dir, tmp_path, capsys):
    # the default questionnaire repeats the meditation block
    main(["--src", str(source_dir), "--out", str(tmp_path / "out"), "--subjects", "S2", "-v"])
    assert "warning: questionnaire block 'Medi 2'" in capsys.readouterr().err


def test_missing_required_argument_is_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--src", "somewhere"])
    assert excinfo.value.code == 2
    assert "--out" in capsys.readouterr().err


def test_empty_subject_list_is_usage_error(source_dir, tmp_path, capsys):
    code = main(["--src", str(source_dir), "--out", str(tmp_path / "out"), "--subjects", " , "])
    assert code == 2
    assert "names no subject" in capsys.readouterr().err


def test_custom_manifest_path(source_dir, tmp_path):
    manifest = tmp_path / "elsewhere" / "run.csv"
    manifest.parent.mkdir()
    code = main(
        [
            "--src", str(source_dir), "--out", str(tmp_path / "out"),
            "--subjects", "S2", "--manifest", str(manifest),
        ]
    )
    assert code == 0
    assert manifest.is_file()
    assert not (tmp_path / "out" / "manifest.csv").exists()


def test_reruns_write_identical_bytes(source_dir, tmp_path):
    for name in ("a", "b"):
        assert main(["--src", str(source_dir), "--out", str(tmp_path / name), "--subjects", "S2"]) == 0
    for filename in ("S2.eda1", "S2.labels.csv", "labels.csv", "manifest.csv"):
        assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()


def test_console_script_reports_version():
    result = subprocess.run(
        [sys.executable, "-m", "wesad_converter.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert __version__ in result.stdout


def test_installed_entry_point_runs(source_dir, tmp_path):
    result = subprocess.run(
        [
            "wesad-convert",
            "--src", str(source_dir),
            "--out", str(tmp_path / "out"),
            "--subjects", "S2",
        ],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    assert "converted 1/1" in result.stdout
