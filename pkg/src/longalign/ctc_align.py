"""Viterbi forced alignment of a known character sequence to CTC logits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import TooShortAudio, UnknownSymbol
from .lgts import LogitMatrix


@dataclass
class CharSpan:
    char: str
    start_frame: int
    end_frame: int  # inclusive


@dataclass
class AlignmentPath:
    spans: list[CharSpan]
    score: float


def _ref_symbol_ids(logits: LogitMatrix, ref_chars: str) -> list[int]:
    ids = []
    for ch in ref_chars:
        sym = logits.word_delim_id if ch == " " else logits.symbol_id(ch)
        if sym is None:
            raise UnknownSymbol(f"reference character {ch!r} not in vocabulary")
        ids.append(sym)
    return ids


def min_expanded_frames(ref_chars: str) -> int:
    """Fewest frames a CTC path for ``ref_chars`` can occupy."""
    need = len(ref_chars)
    for a, b in zip(ref_chars, ref_chars[1:]):
        if a == b:
            need += 1  # mandatory blank between repeated symbols
    return need


def force_align(logits: LogitMatrix, ref_chars: str) -> AlignmentPath:
    """Best CTC path for ``ref_chars`` through ``logits``.

    The expansion interleaves optional blanks (mandatory between repeated
    symbols). Ties resolve to the lexicographically smallest state path.
    """
    if not ref_chars:
        raise ValueError("ref_chars must be non-empty")
    tokens = _ref_symbol_ids(logits, ref_chars)
    t_len = logits.num_frames
    need = min_expanded_frames(ref_chars)
    if need > t_len:
        raise TooShortAudio(
            f"reference needs >= {need} frames after CTC expansion, logits have {t_len}"
        )

    n = len(tokens)
    s_len = 2 * n + 1
    state_syms = np.empty(s_len, dtype=np.int64)
    state_syms[0::2] = logits.blank_id
    state_syms[1::2] = tokens
    skip_ok = np.zeros(s_len, dtype=bool)
    for s in range(3, s_len, 2):
        skip_ok[s] = tokens[(s - 1) // 2] != tokens[(s - 3) // 2]

    emit = logits.frames.astype(np.float64)[:, state_syms]
    states, score = kernels.ctc_viterbi(emit, skip_ok)

    # states never decrease, so each char state is one contiguous run
    spans: list[CharSpan] = []
    prev = -1
    for t, s in enumerate(states):
        s = int(s)
        if s % 2 == 1:
            if s == prev:
                spans[-1].end_frame = t
            else:
                spans.append(CharSpan(ref_chars[(s - 1) // 2], t, t))
        prev = s
    return AlignmentPath(spans=spans, score=score)


def word_offsets(path: AlignmentPath, logits: LogitMatrix) -> list[tuple[str, float, float]]:
    """Words between delimiter spans, with frame-grid millisecond offsets."""
    words: list[tuple[str, float, float]] = []
    cur: list[str] = []
    start_f = end_f = -1
    for span in path.spans + [CharSpan(" ", -1, -1)]:
        if span.char == " ":
            if cur:
                words.append((
                    "".join(cur),
                    logits.frame_to_ms(start_f),
                    logits.frame_to_ms(end_f + 1),
                ))
            cur, start_f = [], -1
        else:
            if not cur:
                start_f = span.start_frame
            cur.append(span.char)
            end_f = span.end_frame
    return words
