"""CTC decoders: greedy collapse and LM-fused prefix beam search.

The beam search scores prefixes by their best single path (Viterbi
semantics), so a width-1 beam with no language model reduces exactly to
greedy decoding. Language-model log10 scores enter on word-delimiter
emissions as ``alpha * ln(10) * log10 P_lm(word | context)`` plus a flat
per-word bonus ``beta``. Frames outside the supplied speech segments are
treated as hard blanks, keeping one hypothesis stream per file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidSegment
from .lgts import LogitMatrix
from .ngram_lm import BOS, ArpaModel

LN10 = math.log(10.0)
NEG_INF = float("-inf")


class Word(NamedTuple):
    word: str
    start_ms: float
    end_ms: float


@dataclass
class DecodedHypothesis:
    text: str
    words: list[Word]
    score: float


def greedy_decode(logits: LogitMatrix) -> DecodedHypothesis:
    """Per-frame argmax with CTC collapse; words from delimiter emissions."""
    frames = logits.frames
    if frames.shape[0] == 0:
        return DecodedHypothesis("", [], 0.0)
    best = frames.argmax(axis=1)
    score = float(frames[np.arange(len(best)), best].astype(np.float64).sum())

    emits: list[list] = []  # [symbol_id, first_frame, last_frame]
    prev = logits.blank_id
    for t, sym in enumerate(best):
        if sym == logits.blank_id:
            prev = sym
            continue
        if sym == prev and emits:
            emits[-1][2] = t
        else:
            emits.append([int(sym), t, t])
        prev = sym

    words: list[Word] = []
    cur: list[str] = []
    cur_start = cur_end = -1
    for sym, first, last in emits + [[logits.word_delim_id, -1, -1]]:
        if sym == logits.word_delim_id:
            if cur:
                words.append(Word(
                    "".join(cur),
                    logits.frame_to_ms(cur_start),
                    logits.frame_to_ms(cur_end + 1),
                ))
            cur, cur_start = [], -1
        else:
            if not cur:
                cur_start = first
            cur.append(logits.vocab[sym])
            cur_end = last
    return DecodedHypothesis(" ".join(w.word for w in words), words, score)


def frames_in_segments(
    logits: LogitMatrix, segments: Sequence[tuple[float, float]] | None
) -> np.ndarray | None:
    """Boolean speech mask per frame, or None when ungated."""
    if segments is None:
        return None
    t_len = logits.num_frames
    mask = np.zeros(t_len, dtype=bool)
    fd = logits.frame_duration_ms
    off = logits.start_offset_ms
    for start_ms, end_ms in segments:
        if end_ms <= start_ms or start_ms < off - 1e-6 or end_ms > logits.end_offset_ms + 1e-6:
            raise InvalidSegment(
                f"segment [{start_ms}, {end_ms}) outside logits range "
                f"[{off}, {logits.end_offset_ms})"
            )
        lo = max(0, int(math.floor((start_ms - off) / fd)))
        hi = min(t_len, int(math.ceil((end_ms - off) / fd)))
        mask[lo:hi] = True
    return mask


class _Meta(NamedTuple):
    words: tuple[tuple[str, int, int], ...]  # completed (word, start_f, end_f)
    cur: str
    cur_start: int
    cur_end: int
    lm_ctx: tuple[str, ...]


_META0 = _Meta((), "", -1, -1, (BOS,))


class _Prefix:
    """Interned trie node for one collapsed symbol sequence.

    Value-equal prefixes always resolve to the same node, so beams can
    merge by object identity, and hashing stays O(1) however long the
    decoded sequence grows.
    """

    __slots__ = ("parent", "sym", "children", "depth")

    def __init__(self, parent: "_Prefix | None", sym: int):
        self.parent = parent
        self.sym = sym
        self.children: dict[int, _Prefix] = {}
        self.depth = 0 if parent is None else parent.depth + 1

    def child(self, sym: int) -> "_Prefix":
        node = self.children.get(sym)
        if node is None:
            node = _Prefix(self, sym)
            self.children[sym] = node
        return node


def _prefix_cmp(a: _Prefix, b: _Prefix) -> int:
    """Lexicographic order of two trie paths via their common ancestor."""
    if a is b:
        return 0
    x, y = a, b
    sa = sb = -1
    while x.depth > y.depth:
        sa, x = x.sym, x.parent
    while y.depth > x.depth:
        sb, y = y.sym, y.parent
    while x is not y:
        sa, x = x.sym, x.parent
        sb, y = y.sym, y.parent
    if x is a:
        return -1  # a is a proper prefix of b
    if y is b:
        return 1
    return -1 if sa < sb else 1


class _PrefixOrder:
    """Sort-key wrapper comparing prefixes lexicographically on demand."""

    __slots__ = ("node",)

    def __init__(self, node: _Prefix):
        self.node = node

    def __eq__(self, other):
        return self.node is other.node

    def __lt__(self, other):
        return _prefix_cmp(self.node, other.node) < 0


# beam entry layout: [p_blank, p_nonblank, meta, best_contribution]
def beam_decode(
    logits: LogitMatrix,
    lm: ArpaModel | None = None,
    alpha: float = 0.5,
    beta: float = 1.5,
    beam_width: int = 100,
    segments: Sequence[tuple[float, float]] | None = None,
    token_min_logp: float = -9.0,
) -> DecodedHypothesis:
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    mask = frames_in_segments(logits, segments)
    frames = logits.frames.astype(np.float64)
    t_len = frames.shape[0]
    blank = logits.blank_id
    delim = logits.word_delim_id
    vocab = logits.vocab

    def lm_bonus(meta: _Meta) -> float:
        if not meta.cur:
            return 0.0
        bonus = beta
        if lm is not None and alpha != 0.0:
            bonus += alpha * LN10 * lm.logprob(meta.lm_ctx, meta.cur)
        return bonus

    root = _Prefix(None, -1)
    beams: list[tuple[_Prefix, list]] = [(root, [0.0, NEG_INF, _META0, 0.0])]

    for t in range(t_len):
        if mask is not None and not mask[t]:
            # non-speech frame: certain blank, prefixes just persist
            for _, entry in beams:
                if entry[1] > entry[0]:
                    entry[0] = entry[1]
                entry[1] = NEG_INF
            continue
        row = frames[t].tolist()
        blank_lp = row[blank]
        top = int(frames[t].argmax())
        cand = [s for s, lp in enumerate(row) if lp >= token_min_logp and s != blank]
        if top != blank and top not in cand:
            cand.append(top)
            cand.sort()

        nxt: dict[_Prefix, list] = {}
        for prefix, (pb, pnb, meta, _) in beams:
            best_in = pb if pb >= pnb else pnb
            last = prefix.sym

            e = nxt.get(prefix)
            if e is None:
                e = [NEG_INF, NEG_INF, None, NEG_INF]
                nxt[prefix] = e
            stay = best_in + blank_lp
            if stay > e[0]:
                e[0] = stay
            if last >= 0 and pnb != NEG_INF:
                rep = pnb + row[last]
                if rep > e[1]:
                    e[1] = rep
            keep = e[0] if e[0] >= e[1] else e[1]
            if keep > e[3]:
                e[3] = keep
                e[2] = meta

            for sym in cand:
                base = pb if sym == last else best_in
                if base == NEG_INF:
                    continue
                score = base + row[sym]
                if sym == delim:
                    # delimiters with no pending word add no word and no bonus
                    if meta.cur:
                        new_meta = _Meta(
                            meta.words + ((meta.cur, meta.cur_start, meta.cur_end),),
                            "", -1, -1,
                            _advance_ctx(meta.lm_ctx, meta.cur, lm),
                        )
                        score += lm_bonus(meta)
                    else:
                        new_meta = meta
                else:
                    new_meta = _Meta(
                        meta.words,
                        meta.cur + vocab[sym],
                        t if not meta.cur else meta.cur_start,
                        t,
                        meta.lm_ctx,
                    )
                node = prefix.child(sym)
                e = nxt.get(node)
                if e is None:
                    e = [NEG_INF, NEG_INF, None, NEG_INF]
                    nxt[node] = e
                if score > e[1]:
                    e[1] = score
                if score > e[3]:
                    e[3] = score
                    e[2] = new_meta

        beams = sorted(
            nxt.items(),
            key=lambda kv: (
                -(kv[1][0] if kv[1][0] >= kv[1][1] else kv[1][1]),
                _PrefixOrder(kv[0]),
            ),
        )[:beam_width]

    def final_score(entry) -> float:
        pb, pnb, meta, _ = entry
        return (pb if pb >= pnb else pnb) + lm_bonus(meta)

    _, best_entry = min(
        beams, key=lambda kv: (-final_score(kv[1]), _PrefixOrder(kv[0]))
    )
    meta = best_entry[2]
    done = list(meta.words)
    if meta.cur:
        done.append((meta.cur, meta.cur_start, meta.cur_end))
    words = [
        Word(w, logits.frame_to_ms(sf), logits.frame_to_ms(ef + 1))
        for w, sf, ef in done
        if w
    ]
    return DecodedHypothesis(
        " ".join(w.word for w in words), words, final_score(best_entry)
    )


def _advance_ctx(ctx: tuple[str, ...], word: str, lm: ArpaModel | None) -> tuple[str, ...]:
    if lm is None:
        return ctx
    return (ctx + (word,))[-(lm.order - 1):] if lm.order > 1 else ()
