"""LGTS container writer (and a reader for self-checks).

Byte layout, little-endian throughout:
    magic "LGTS" | u32 version=1 | u32 T | u32 V | u32 blank_id |
    u32 word_delim_id | f32 frame_duration_ms | f64 start_offset_ms |
    T*V f32 row-major log-probs | UTF-8 JSON trailer {"vocab": [...]} |
    u64 trailer byte length

This is the interchange contract with the alignment engine; the fixture
files checked into both repos pin it byte for byte.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"LGTS"
VERSION = 1
HEADER = struct.Struct("<4sIIIIIfd")


@dataclass
class LogitsFile:
    frames: np.ndarray  # (T, V) float32 log-softmax rows
    vocab: list[str]
    blank_id: int
    word_delim_id: int
    frame_duration_ms: float
    start_offset_ms: float = 0.0


def write(path: str | Path, data: LogitsFile) -> None:
    frames = np.ascontiguousarray(data.frames, dtype="<f4")
    t_len, v = frames.shape
    if v != len(data.vocab):
        raise ValueError("vocab length does not match frame width")
    trailer = json.dumps({"vocab": data.vocab}, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, t_len, v, data.blank_id,
                             data.word_delim_id, float(data.frame_duration_ms),
                             float(data.start_offset_ms)))
        fh.write(frames.tobytes())
        fh.write(trailer)
        fh.write(struct.pack("<Q", len(trailer)))


def read(path: str | Path) -> LogitsFile:
    blob = Path(path).read_bytes()
    magic, version, t_len, v, blank_id, word_delim_id, frame_ms, start_ms = \
        HEADER.unpack_from(blob, 0)
    if magic != MAGIC or version != VERSION:
        raise ValueError(f"{path}: not a version-{VERSION} LGTS file")
    (trailer_len,) = struct.unpack_from("<Q", blob, len(blob) - 8)
    trailer = json.loads(blob[len(blob) - 8 - trailer_len:len(blob) - 8])
    frames = np.frombuffer(blob, dtype="<f4", count=t_len * v,
                           offset=HEADER.size).reshape(t_len, v).copy()
    return LogitsFile(frames, [str(s) for s in trailer["vocab"]], blank_id,
                      word_delim_id, frame_ms, start_ms)
