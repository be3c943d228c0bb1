"""Energy gate over externally produced speech-activity segments.

Quiet segments (typically background conversations that transcribers
skip) are dropped by RMS level measured over the whole segment against
digital full scale. The neural VAD itself is out of scope; segments
arrive as JSON.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.io import wavfile

from .errors import EmptyWindow, SegmentOutOfRange

DEFAULT_THRESHOLD_DB = -45.0
# tolerance so that analytically-on-threshold segments survive float rounding
_DB_EPS = 1e-9


class SpeechSegment(NamedTuple):
    start_ms: float
    end_ms: float


def rms_dbfs(samples: np.ndarray) -> float:
    """RMS level in dB relative to full scale; silence is -inf."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise EmptyWindow("RMS window contains no samples")
    mean_sq = float(np.mean(samples * samples))
    if mean_sq == 0.0:
        return float("-inf")
    return 10.0 * math.log10(mean_sq)


def read_wav_mono(path: str | Path) -> tuple[np.ndarray, int]:
    """PCM WAV (16-bit int or 32-bit float) as float64 samples in [-1, 1]."""
    rate, data = wavfile.read(str(path))
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0, rate
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64), rate
    raise ValueError(f"{path}: unsupported sample format {data.dtype}")


def filter_segments(
    segments: list[SpeechSegment],
    audio: np.ndarray,
    sample_rate: int,
    threshold_db: float = DEFAULT_THRESHOLD_DB,
) -> list[SpeechSegment]:
    """Keep segments whose full-span RMS is at or above the threshold."""
    duration_ms = len(audio) * 1000.0 / sample_rate
    kept = []
    for seg in segments:
        if seg.end_ms <= seg.start_ms or seg.start_ms < 0 or seg.end_ms > duration_ms + 1e-6:
            raise SegmentOutOfRange(
                f"segment [{seg.start_ms}, {seg.end_ms}) outside audio of {duration_ms:.3f} ms"
            )
        lo = int(round(seg.start_ms * sample_rate / 1000.0))
        hi = min(len(audio), int(round(seg.end_ms * sample_rate / 1000.0)))
        if hi <= lo:
            continue
        if rms_dbfs(audio[lo:hi]) >= threshold_db - _DB_EPS:
            kept.append(seg)
    return kept


def read_segments_json(path: str | Path) -> list[SpeechSegment]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    segs = [SpeechSegment(float(d["start_ms"]), float(d["end_ms"])) for d in raw]
    for seg in segs:
        if seg.end_ms <= seg.start_ms:
            raise ValueError(f"{path}: segment {seg} has non-positive length")
    return segs


def write_segments_json(path: str | Path, segments: list[SpeechSegment]) -> None:
    payload = [{"start_ms": s.start_ms, "end_ms": s.end_ms} for s in segments]
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")
