"""Command-line entry point: ``wesad-convert --src <dir> --out <dir>``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .convert import WESAD_SUBJECTS, convert_all


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wesad-convert",
        description=(
            "Convert WESAD per-subject archives into EDA1 signal files and "
            "label CSVs (one .eda1 and one .labels.csv per subject, plus a "
            "merged labels.csv and a run manifest)."
        ),
    )
    parser.add_argument("--version", action="version", version=f"wesad-convert {__version__}")
    parser.add_argument("--src", required=True, help="dataset root (contains S2/, S3/, ...)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--subjects",
        help=f"comma-separated subject ids (default: {','.join(WESAD_SUBJECTS)})",
    )
    parser.add_argument("--manifest", help="manifest CSV path (default: <out>/manifest.csv)")
    parser.add_argument("-v", "--verbose", action="store_true", help="print per-subject warnings")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    subjects = (
        tuple(s.strip() for s in args.subjects.split(",") if s.strip())
        if args.subjects
        else WESAD_SUBJECTS
    )
    if not subjects:
        print("error: --subjects names no subject", file=sys.stderr)
        return 2
    manifest = convert_all(args.src, args.out, subjects=subjects, manifest_path=args.manifest)
    for entry in manifest.outputs:
        print(f"{entry.subject_id}: ok ({entry.sample_count} samples)")
        if args.verbose:
            for warning in entry.warnings:
                print(f"  warning: {warning}", file=sys.stderr)
    for subject_id, reason in manifest.failures.items():
        print(f"{subject_id}: FAILED — {reason}", file=sys.stderr)
    print(f"converted {len(manifest.outputs)}/{len(manifest.subjects)} subject(s)")
    return 1 if manifest.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
