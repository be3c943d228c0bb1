"""Batch export: one LGTS file plus checksum per audio file."""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import format as lgts
from .models import ModelOutput, load_audio_16k, load_model


@dataclass
class ExportManifest:
    audio_files: list[Path]
    model_id: str
    output_dir: Path
    frame_duration_ms: float = 20.0
    results: dict = field(default_factory=dict)


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def export(manifest: ExportManifest) -> dict[str, str]:
    """Write <stem>.lgts (+ .sha256) per audio file; returns checksums."""
    model = load_model(manifest.model_id)
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checksums: dict[str, str] = {}
    is_stub = manifest.model_id.startswith("stub:")
    for audio_path in manifest.audio_files:
        audio_path = Path(audio_path)
        samples = None if is_stub else load_audio_16k(audio_path)
        output: ModelOutput = model.run(samples)
        target = out_dir / f"{audio_path.stem}.lgts"
        tmp_target = out_dir / f".{target.name}.build"
        lgts.write(tmp_target, lgts.LogitsFile(
            frames=output.frames,
            vocab=output.vocab,
            blank_id=output.blank_id,
            word_delim_id=output.word_delim_id,
            frame_duration_ms=manifest.frame_duration_ms,
        ))
        blob = tmp_target.read_bytes()
        os.replace(tmp_target, target)
        digest = hashlib.sha256(blob).hexdigest()
        _atomic_write_bytes(target.with_suffix(".lgts.sha256"),
                            digest.encode("ascii"))
        checksums[target.name] = digest
    manifest.results = checksums
    return checksums
