"""Thin exporter bridging CTC model runtimes to the LGTS file contract."""

from .format import LogitsFile, read, write
from .manifest import ExportManifest, export
from .models import (AudioDecodeError, ModelLoadError, expected_frames,
                     load_model, stub_rows)

__version__ = "0.1.0"

__all__ = [
    "AudioDecodeError", "ExportManifest", "LogitsFile", "ModelLoadError",
    "expected_frames", "export", "load_model", "read", "stub_rows", "write",
]
