"""LGTS binary container for cached acoustic log-probabilities.

Layout (all little-endian):
    magic "LGTS" | u32 version=1 | u32 T | u32 V | u32 blank_id |
    u32 word_delim_id | f32 frame_duration_ms | f64 start_offset_ms |
    T*V f32 row-major log-probs | UTF-8 JSON trailer {"vocab": [...]} |
    u64 trailer byte length
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError

MAGIC = b"LGTS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIIfd")


@dataclass
class LogitMatrix:
    frames: np.ndarray  # (T, V) float32 log-softmax rows
    vocab: list[str]
    blank_id: int
    word_delim_id: int
    frame_duration_ms: float
    start_offset_ms: float = 0.0
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 2:
            raise ValueError("frames must be a T x V matrix")
        if self.frames.shape[1] != len(self.vocab):
            raise ValueError("vocab size does not match frame width")
        if self.blank_id == self.word_delim_id or max(self.blank_id, self.word_delim_id) >= len(self.vocab):
            raise ValueError("blank_id / word_delim_id invalid for vocab")
        if self.frame_duration_ms <= 0:
            raise ValueError("frame_duration_ms must be positive")
        self._index = {s: i for i, s in enumerate(self.vocab)}

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.frames.shape[1]

    @property
    def duration_ms(self) -> float:
        return self.num_frames * self.frame_duration_ms

    @property
    def end_offset_ms(self) -> float:
        return self.start_offset_ms + self.duration_ms

    def symbol_id(self, symbol: str) -> int | None:
        return self._index.get(symbol)

    def frame_to_ms(self, frame: int) -> float:
        return self.start_offset_ms + frame * self.frame_duration_ms


def write_lgts(path: str | Path, m: LogitMatrix) -> None:
    t, v = m.frames.shape
    trailer = json.dumps({"vocab": m.vocab}, ensure_ascii=False).encode("utf-8")
    header = _HEADER.pack(
        MAGIC, VERSION, t, v, m.blank_id, m.word_delim_id,
        float(m.frame_duration_ms), float(m.start_offset_ms),
    )
    body = np.ascontiguousarray(m.frames, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
        fh.write(trailer)
        fh.write(struct.pack("<Q", len(trailer)))


def read_lgts(path: str | Path) -> LogitMatrix:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size + 8:
        raise ParseError(f"{path}: file too short for an LGTS container")
    magic, version, t, v, blank_id, word_delim_id, frame_ms, start_ms = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    (trailer_len,) = struct.unpack_from("<Q", blob, len(blob) - 8)
    body_end = _HEADER.size + t * v * 4
    trailer_start = len(blob) - 8 - trailer_len
    if trailer_start != body_end:
        raise ParseError(
            f"{path}: layout mismatch (T*V body ends at {body_end}, trailer starts at {trailer_start})"
        )
    try:
        trailer = json.loads(blob[trailer_start:len(blob) - 8].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: bad JSON trailer: {exc}")
    vocab = trailer.get("vocab")
    if not isinstance(vocab, list) or len(vocab) != v:
        raise ParseError(f"{path}: trailer vocab missing or wrong length")
    frames = np.frombuffer(blob, dtype="<f4", count=t * v, offset=_HEADER.size).reshape(t, v)
    return LogitMatrix(
        frames=frames.copy(),
        vocab=[str(s) for s in vocab],
        blank_id=blank_id,
        word_delim_id=word_delim_id,
        frame_duration_ms=frame_ms,
        start_offset_ms=start_ms,
    )
