"""Anchor-based matching between ASR token output and reference tokens.

The search proceeds in phases: sliding-window histogram candidates are
refined with Levenshtein alignment and edge trimming; gaps flanked by
accepted anchors are force-aligned against the enclosed reference
interval; whatever remains is recursively re-matched against the whole
reference, which recovers out-of-order transcript blocks. Coverage is
tracked per phase to support threshold tuning.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels

PHASE_HISTOGRAM = "histogram"
PHASE_GAP_FILL = "gap_fill"
PHASE_RECURSIVE = "recursive"
PHASE_ORDER = (PHASE_HISTOGRAM, PHASE_GAP_FILL, PHASE_RECURSIVE)

OP_NAMES = {kernels.OP_MATCH: "match", kernels.OP_SUB: "sub",
            kernels.OP_DEL: "del", kernels.OP_INS: "ins"}


class EditOp(NamedTuple):
    op: str
    a_index: int | None  # token index in the first sequence
    b_index: int | None  # token index in the second sequence


@dataclass(frozen=True)
class MatchSpan:
    asr_range: tuple[int, int]
    ref_range: tuple[int, int]
    edit_distance: int
    phase: str
    ops: tuple[EditOp, ...] = field(default=(), compare=False)


@dataclass
class MatchParams:
    window: int = 20
    stride: int = 10
    min_overlap: float = 0.5
    accept_threshold: float = 0.4
    gap_fill_threshold: float = 0.6
    max_depth: int = 2
    top_candidates: int = 5
    char_level_below: int = 5  # spans shorter than this refine on characters
    gap_fill_max_cells: int = 250_000


@dataclass
class CoverageStats:
    asr_total: int
    ref_total: int
    per_phase: dict[str, dict[str, float]]
    cumulative: dict[str, dict[str, float]]

    def to_json(self) -> dict:
        return {
            "asr_total": self.asr_total,
            "ref_total": self.ref_total,
            "per_phase": self.per_phase,
            "cumulative": self.cumulative,
        }


# ---------------------------------------------------------------------------
# Levenshtein with edit script
# ---------------------------------------------------------------------------

def _to_ids(*seqs: Iterable) -> list[np.ndarray]:
    table: dict = {}
    out = []
    for seq in seqs:
        ids = np.empty(len(seq), dtype=np.int32)
        for i, tok in enumerate(seq):
            ids[i] = table.setdefault(tok, len(table))
        out.append(ids)
    return out


def levenshtein(a: list, b: list) -> tuple[int, list[EditOp]]:
    """Unit-cost edit distance and a script rebuilding ``b`` from ``a``.

    Backtrace ties prefer match > substitution > deletion > insertion.
    """
    a_ids, b_ids = _to_ids(a, b)
    dist, codes = kernels.levenshtein_ops(a_ids, b_ids)
    script: list[EditOp] = []
    i = j = 0
    for code in codes:
        name = OP_NAMES[int(code)]
        if name in ("match", "sub"):
            script.append(EditOp(name, i, j))
            i += 1
            j += 1
        elif name == "del":
            script.append(EditOp(name, i, None))
            i += 1
        else:
            script.append(EditOp(name, None, j))
            j += 1
    return dist, script


def levenshtein_distance(a: list, b: list) -> int:
    a_ids, b_ids = _to_ids(a, b)
    return kernels.levenshtein_distance_ids(a_ids, b_ids)


# ---------------------------------------------------------------------------
# Recording/transcript pairing by n-gram coverage
# ---------------------------------------------------------------------------

def ngram_coverage(asr_tokens: list[str], ref_tokens: list[str], n: int) -> float:
    """Capped shared n-gram multiset size over the number of ASR n-grams."""
    total = len(asr_tokens) - n + 1
    if total <= 0:
        return 0.0
    asr_grams = Counter(tuple(asr_tokens[i:i + n]) for i in range(total))
    ref_grams = Counter(tuple(ref_tokens[i:i + n]) for i in range(len(ref_tokens) - n + 1))
    shared = sum(min(c, ref_grams[g]) for g, c in asr_grams.items())
    return shared / total


def pair_recordings(
    asr_texts: dict[str, list[str]],
    transcripts: dict[str, list[str]],
    n: int = 3,
    floor: float = 0.1,
) -> list[tuple[str, str, float]]:
    """All (file, section, coverage) pairs at or above the score floor."""
    pairs = []
    for file_id in sorted(asr_texts):
        for section_id in sorted(transcripts):
            score = ngram_coverage(asr_texts[file_id], transcripts[section_id], n)
            if score >= floor:
                pairs.append((file_id, section_id, score))
    pairs.sort(key=lambda p: (p[0], -p[2], p[1]))
    return pairs


# ---------------------------------------------------------------------------
# Candidate generation
# ---------------------------------------------------------------------------

def _window_starts(lo: int, hi: int, window: int, stride: int) -> list[tuple[int, int]]:
    length = hi - lo
    if length <= 0:
        return []
    if length <= window:
        return [(lo, hi)]
    starts = list(range(lo, hi - window + 1, stride))
    if starts[-1] + window < hi:
        starts.append(hi - window)
    return [(s, s + window) for s in starts]


def candidate_search(
    asr: list[str],
    ref: list[str],
    window: int,
    stride: int,
    min_overlap: float,
) -> list[tuple[tuple[int, int], list[tuple[float, int]]]]:
    """Per ASR window: ref positions ranked by histogram overlap."""
    out = []
    ids = _to_ids(ref, asr)
    ref_ids, asr_ids = ids
    k = int(max(ref_ids.max(initial=-1), asr_ids.max(initial=-1))) + 1
    for w_lo, w_hi in _window_starts(0, len(asr), window, stride):
        wlen = w_hi - w_lo
        win_counts = np.bincount(asr_ids[w_lo:w_hi], minlength=k)
        if len(ref) >= wlen:
            scores = kernels.window_intersections(ref_ids, win_counts.astype(np.int32), wlen)
        else:
            inter = sum((Counter(ref) & Counter(asr[w_lo:w_hi])).values())
            scores = np.array([inter], dtype=np.int32)
        overlaps = scores / wlen
        hits = [
            (float(overlaps[p]), int(p))
            for p in np.flatnonzero(overlaps >= min_overlap)
        ]
        hits.sort(key=lambda h: (-h[0], h[1]))
        out.append(((w_lo, w_hi), hits))
    return out


# ---------------------------------------------------------------------------
# Refinement: align, trim edge indels, threshold on normalized distance
# ---------------------------------------------------------------------------

@dataclass
class _Aligned:
    asr_lo: int
    asr_hi: int
    ref_lo: int
    ref_hi: int
    ops: list[EditOp]  # absolute indices
    distance: int
    norm_dist: float


def _absolute_ops(script: list[EditOp], asr_base: int, ref_base: int) -> list[EditOp]:
    out = []
    for op in script:
        out.append(EditOp(
            op.op,
            None if op.a_index is None else asr_base + op.a_index,
            None if op.b_index is None else ref_base + op.b_index,
        ))
    return out


def _build_aligned(ops: list[EditOp], asr: list[str], ref: list[str],
                   char_level_below: int) -> _Aligned | None:
    # trim leading/trailing insertions and deletions
    lo, hi = 0, len(ops)
    while lo < hi and ops[lo].op in ("del", "ins"):
        lo += 1
    while hi > lo and ops[hi - 1].op in ("del", "ins"):
        hi -= 1
    core = ops[lo:hi]
    if not core:
        return None
    asr_lo, asr_hi = core[0].a_index, core[-1].a_index + 1
    ref_lo, ref_hi = core[0].b_index, core[-1].b_index + 1
    distance = sum(1 for op in core if op.op != "match")
    asr_len, ref_len = asr_hi - asr_lo, ref_hi - ref_lo
    if min(asr_len, ref_len) < char_level_below:
        a_text = " ".join(asr[asr_lo:asr_hi])
        b_text = " ".join(ref[ref_lo:ref_hi])
        char_dist = levenshtein_distance(list(a_text), list(b_text))
        norm = char_dist / max(len(a_text), len(b_text), 1)
    else:
        norm = distance / max(asr_len, ref_len)
    return _Aligned(asr_lo, asr_hi, ref_lo, ref_hi, core, distance, norm)


def refine_candidate(
    asr: list[str],
    ref: list[str],
    asr_window: tuple[int, int],
    ref_window: tuple[int, int],
    threshold: float,
    char_level_below: int = 5,
) -> _Aligned | None:
    """Align one candidate window pair; None when rejected."""
    a_lo, a_hi = asr_window
    r_lo, r_hi = ref_window
    _, script = levenshtein(asr[a_lo:a_hi], ref[r_lo:r_hi])
    aligned = _build_aligned(
        _absolute_ops(script, a_lo, r_lo), asr, ref, char_level_below
    )
    if aligned is None or aligned.norm_dist > threshold:
        return None
    return aligned


def _clip_aligned(aligned: _Aligned, free: tuple[int, int], asr: list[str],
                  ref: list[str], threshold: float, char_level_below: int) -> _Aligned | None:
    lo, hi = free
    kept = [
        op for op in aligned.ops
        if op.a_index is None or lo <= op.a_index < hi
    ]
    clipped = _build_aligned(kept, asr, ref, char_level_below)
    if clipped is None or clipped.norm_dist > threshold:
        return None
    return clipped


# ---------------------------------------------------------------------------
# Phase orchestration
# ---------------------------------------------------------------------------

def _free_intervals(lo: int, hi: int, occupied: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    cur = lo
    for o_lo, o_hi in sorted(occupied):
        if o_hi <= lo or o_lo >= hi:
            continue
        if o_lo > cur:
            out.append((cur, min(o_lo, hi)))
        cur = max(cur, o_hi)
    if cur < hi:
        out.append((cur, hi))
    return [iv for iv in out if iv[1] > iv[0]]


def _histogram_pass(asr, ref, regions, params: MatchParams) -> list[_Aligned]:
    proposals: list[_Aligned] = []
    for reg_lo, reg_hi in regions:
        sub = asr[reg_lo:reg_hi]
        if not sub:
            continue
        for (w_lo, w_hi), hits in candidate_search(
            sub, ref, params.window, params.stride, params.min_overlap
        ):
            wlen = w_hi - w_lo
            best: _Aligned | None = None
            for _, ref_pos in hits[:params.top_candidates]:
                cand = refine_candidate(
                    asr, ref,
                    (reg_lo + w_lo, reg_lo + w_hi),
                    (ref_pos, min(ref_pos + wlen, len(ref))),
                    params.accept_threshold,
                    params.char_level_below,
                )
                if cand is not None and (best is None or cand.norm_dist < best.norm_dist):
                    best = cand
            if best is not None:
                proposals.append(best)

    proposals.sort(key=lambda s: (s.norm_dist, s.asr_lo - s.asr_hi, s.asr_lo, s.ref_lo))
    accepted: list[_Aligned] = []
    occupied: list[tuple[int, int]] = []
    for prop in proposals:
        for free in _free_intervals(prop.asr_lo, prop.asr_hi, occupied):
            clipped = _clip_aligned(
                prop, free, asr, ref, params.accept_threshold, params.char_level_below
            )
            if clipped is not None:
                accepted.append(clipped)
                occupied.append((clipped.asr_lo, clipped.asr_hi))
    return accepted


def _gap_fill_pass(asr, ref, spans: list[_Aligned], params: MatchParams) -> list[_Aligned]:
    filled = []
    ordered = sorted(spans, key=lambda s: s.asr_lo)
    for left, right in zip(ordered, ordered[1:]):
        gap_lo, gap_hi = left.asr_hi, right.asr_lo
        ref_lo, ref_hi = left.ref_hi, right.ref_lo
        if gap_hi <= gap_lo or ref_hi <= ref_lo:
            continue  # empty gap or inverted reference interval
        if (gap_hi - gap_lo) * (ref_hi - ref_lo) > params.gap_fill_max_cells:
            continue  # too large to force; leave for recursion
        cand = refine_candidate(
            asr, ref, (gap_lo, gap_hi), (ref_lo, ref_hi),
            params.gap_fill_threshold, params.char_level_below,
        )
        if cand is not None:
            filled.append(cand)
    return filled


def _merge_adjacent(spans: list[MatchSpan]) -> list[MatchSpan]:
    ordered = sorted(spans, key=lambda s: s.asr_range)
    merged: list[MatchSpan] = []
    for span in ordered:
        prev = merged[-1] if merged else None
        if (
            prev is not None
            and prev.phase == span.phase
            and prev.asr_range[1] == span.asr_range[0]
            and prev.ref_range[1] == span.ref_range[0]
        ):
            merged[-1] = MatchSpan(
                (prev.asr_range[0], span.asr_range[1]),
                (prev.ref_range[0], span.ref_range[1]),
                prev.edit_distance + span.edit_distance,
                prev.phase,
                prev.ops + span.ops,
            )
        else:
            merged.append(span)
    return merged


def _as_span(aligned: _Aligned, phase: str) -> MatchSpan:
    return MatchSpan(
        (aligned.asr_lo, aligned.asr_hi),
        (aligned.ref_lo, aligned.ref_hi),
        aligned.distance,
        phase,
        tuple(aligned.ops),
    )


def _match_regions(asr, ref, regions, params: MatchParams, depth: int) -> list[MatchSpan]:
    if not regions:
        return []
    label = PHASE_RECURSIVE if depth > 0 else PHASE_HISTOGRAM
    hist = _histogram_pass(asr, ref, regions, params)
    spans = [_as_span(a, label) for a in hist]

    gap_label = PHASE_RECURSIVE if depth > 0 else PHASE_GAP_FILL
    filled = _gap_fill_pass(asr, ref, hist, params)
    spans.extend(_as_span(a, gap_label) for a in filled)

    if depth < params.max_depth:
        occupied = [s.asr_range for s in spans]
        leftover = []
        for reg_lo, reg_hi in regions:
            leftover.extend(_free_intervals(reg_lo, reg_hi, occupied))
        spans.extend(_match_regions(asr, ref, leftover, params, depth + 1))
    return spans


def match_sequences(
    asr: list[str], ref: list[str], params: MatchParams | None = None
) -> tuple[list[MatchSpan], CoverageStats]:
    params = params or MatchParams()
    spans = _match_regions(asr, ref, [(0, len(asr))], params, 0)
    spans = _merge_adjacent(spans)
    spans.sort(key=lambda s: s.asr_range)
    return spans, _coverage(spans, len(asr), len(ref))


def _coverage(spans: list[MatchSpan], asr_total: int, ref_total: int) -> CoverageStats:
    per_phase: dict[str, dict[str, float]] = {}
    cumulative: dict[str, dict[str, float]] = {}
    ref_seen: set[int] = set()
    asr_count = 0
    ref_count = 0
    for phase in PHASE_ORDER:
        phase_asr = 0
        phase_ref = 0
        for span in spans:
            if span.phase != phase:
                continue
            phase_asr += span.asr_range[1] - span.asr_range[0]
            new_ref = set(range(*span.ref_range)) - ref_seen
            phase_ref += len(new_ref)
            ref_seen |= new_ref
        asr_count += phase_asr
        ref_count += phase_ref
        per_phase[phase] = {
            "asr": phase_asr / asr_total if asr_total else 0.0,
            "ref": phase_ref / ref_total if ref_total else 0.0,
        }
        cumulative[phase] = {
            "asr": asr_count / asr_total if asr_total else 0.0,
            "ref": ref_count / ref_total if ref_total else 0.0,
        }
    return CoverageStats(asr_total, ref_total, per_phase, cumulative)
