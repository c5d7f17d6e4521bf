"""Windowed contextual embedding extraction for annotated-discourse tokens."""

__version__ = "0.1.0"

from .extract import (
    ExtractionError,
    ExtractionJob,
    ExtractionResult,
    extract,
    read_annotation_tokens,
)

__all__ = [
    "ExtractionError",
    "ExtractionJob",
    "ExtractionResult",
    "extract",
    "read_annotation_tokens",
]
