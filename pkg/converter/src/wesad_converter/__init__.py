"""One-shot converter from WESAD subject archives to EDA1 + label CSVs."""

from .archive import SAMPLE_RATE_HZ, read_questionnaire, read_recording
from .convert import (
    CODE_TO_TAG,
    WESAD_SUBJECTS,
    ConversionManifest,
    SubjectOutput,
    convert_all,
    convert_subject,
    spans_from_codes,
)
from .errors import ConversionError
from .output import CONDITION_TAGS, LABEL_CSV_HEADER, write_labels, write_signal

__version__ = "1.0.0"

__all__ = [
    "CODE_TO_TAG",
    "CONDITION_TAGS",
    "ConversionError",
    "ConversionManifest",
    "LABEL_CSV_HEADER",
    "SAMPLE_RATE_HZ",
    "SubjectOutput",
    "WESAD_SUBJECTS",
    "convert_all",
    "convert_subject",
    "read_questionnaire",
    "read_recording",
    "spans_from_codes",
    "write_labels",
    "write_signal",
    "__version__",
]
