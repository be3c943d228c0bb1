"""Hot numeric kernels: Levenshtein DP, CTC Viterbi, sliding histograms.

Each kernel has two interchangeable implementations: a numba ``@njit``
loop and a vectorized NumPy one. The numba path is used when numba
imports cleanly; set ``LONGALIGN_NO_NUMBA=1`` to force the NumPy path.
Both paths produce bit-identical outputs (integer DP, and float DP with
the same association order), which `benchmarks/bench_kernels.py` relies
on when comparing their speed.
"""

from __future__ import annotations

import os

import numpy as np

NEG_INF = float("-inf")


def _want_numba() -> bool:
    flag = os.environ.get("LONGALIGN_NO_NUMBA", "").strip().lower()
    return flag not in {"1", "true", "yes", "on"}


USE_NUMBA = _want_numba()
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


# ---------------------------------------------------------------------------
# Levenshtein
# ---------------------------------------------------------------------------

def _lev_matrix_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = len(a), len(b)
    d = np.empty((n + 1, m + 1), dtype=np.int32)
    d[0] = np.arange(m + 1, dtype=np.int32)
    cols = np.arange(m + 1, dtype=np.int32)
    cand = np.empty(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        up = d[i - 1]
        cand[0] = i
        # vertical (delete) vs diagonal (match/substitute) candidates
        np.minimum(up[:-1] + (b != a[i - 1]), up[1:] + 1, out=cand[1:])
        # fold in horizontal (insert) moves via a prefix-min scan
        cand -= cols
        np.minimum.accumulate(cand, out=cand)
        cand += cols
        d[i] = cand
    return d


def _lev_matrix_loop(a, b):
    n, m = len(a), len(b)
    d = np.empty((n + 1, m + 1), dtype=np.int32)
    for j in range(m + 1):
        d[0, j] = j
    for i in range(1, n + 1):
        d[i, 0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = d[i - 1, j - 1] + cost
            if d[i - 1, j] + 1 < best:
                best = d[i - 1, j] + 1
            if d[i, j - 1] + 1 < best:
                best = d[i, j - 1] + 1
            d[i, j] = best
    return d


def _lev_distance_np(a: np.ndarray, b: np.ndarray) -> int:
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.arange(m + 1, dtype=np.int32)
    cols = np.arange(m + 1, dtype=np.int32)
    row = np.empty(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        row[0] = i
        np.minimum(prev[:-1] + (b != a[i - 1]), prev[1:] + 1, out=row[1:])
        row -= cols
        np.minimum.accumulate(row, out=row)
        row += cols
        prev, row = row, prev
    return int(prev[m])


def _lev_distance_loop(a, b):
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.arange(m + 1, dtype=np.int32)
    row = np.empty(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        row[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
            row[j] = best
        prev, row = row, prev
    return int(prev[m])


# Edit operation codes used in backtraces.
OP_MATCH, OP_SUB, OP_DEL, OP_INS = 0, 1, 2, 3


def _lev_backtrace(a: np.ndarray, b: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Walk the DP matrix back from (n, m) preferring match > sub > del > ins."""
    i, j = len(a), len(b)
    ops = []
    while i > 0 or j > 0:
        here = d[i, j]
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and d[i - 1, j - 1] == here:
            ops.append(OP_MATCH)
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and d[i - 1, j - 1] + 1 == here:
            ops.append(OP_SUB)
            i -= 1
            j -= 1
        elif i > 0 and d[i - 1, j] + 1 == here:
            ops.append(OP_DEL)
            i -= 1
        else:
            ops.append(OP_INS)
            j -= 1
    ops.reverse()
    return np.asarray(ops, dtype=np.int8)


# ---------------------------------------------------------------------------
# CTC Viterbi (backward DP + forward walk)
# ---------------------------------------------------------------------------

def _viterbi_dp_np(emit: np.ndarray, skip_ok: np.ndarray) -> np.ndarray:
    t_len, s_len = emit.shape
    db = np.full((t_len, s_len), NEG_INF)
    db[t_len - 1, s_len - 1] = emit[t_len - 1, s_len - 1]
    if s_len >= 2:
        db[t_len - 1, s_len - 2] = emit[t_len - 1, s_len - 2]
    for t in range(t_len - 2, -1, -1):
        nxt = db[t + 1]
        best = nxt.copy()
        np.maximum(best[:-1], nxt[1:], out=best[:-1])
        if s_len > 2:
            skip_vals = np.where(skip_ok[2:], nxt[2:], NEG_INF)
            np.maximum(best[:-2], skip_vals, out=best[:-2])
        db[t] = emit[t] + best
    return db


def _viterbi_dp_loop(emit, skip_ok):
    t_len, s_len = emit.shape
    db = np.full((t_len, s_len), NEG_INF)
    db[t_len - 1, s_len - 1] = emit[t_len - 1, s_len - 1]
    if s_len >= 2:
        db[t_len - 1, s_len - 2] = emit[t_len - 1, s_len - 2]
    for t in range(t_len - 2, -1, -1):
        for s in range(s_len):
            best = db[t + 1, s]
            if s + 1 < s_len and db[t + 1, s + 1] > best:
                best = db[t + 1, s + 1]
            if s + 2 < s_len and skip_ok[s + 2] and db[t + 1, s + 2] > best:
                best = db[t + 1, s + 2]
            db[t, s] = emit[t, s] + best
    return db


def _viterbi_walk(db: np.ndarray, skip_ok: np.ndarray) -> np.ndarray:
    """Forward walk choosing the smallest optimal state at every step.

    Yields the lexicographically smallest maximum-score state path, the
    same canonical path an exhaustive enumeration with ordered DFS finds.
    """
    t_len, s_len = db.shape
    states = np.empty(t_len, dtype=np.int32)
    s = 0 if (s_len < 2 or db[0, 0] >= db[0, 1]) else 1
    states[0] = s
    for t in range(1, t_len):
        best = db[t, s]
        nxt = s
        if s + 1 < s_len and db[t, s + 1] > best:
            best = db[t, s + 1]
            nxt = s + 1
        if s + 2 < s_len and skip_ok[s + 2] and db[t, s + 2] > best:
            nxt = s + 2
        s = nxt
        states[t] = s
    return states


# ---------------------------------------------------------------------------
# Sliding-window histogram intersection
# ---------------------------------------------------------------------------

def _window_intersections_impl(ref_ids, win_counts, wlen, n_positions, out):
    k = len(win_counts)
    cnt = np.zeros(k, dtype=np.int32)
    inter = 0
    for i in range(wlen):
        v = ref_ids[i]
        if cnt[v] < win_counts[v]:
            inter += 1
        cnt[v] += 1
    out[0] = inter
    for p in range(1, n_positions):
        old = ref_ids[p - 1]
        cnt[old] -= 1
        if cnt[old] < win_counts[old]:
            inter -= 1
        new = ref_ids[p + wlen - 1]
        if cnt[new] < win_counts[new]:
            inter += 1
        cnt[new] += 1
        out[p] = inter
    return out


if USE_NUMBA:
    _lev_matrix_jit = njit(cache=True)(_lev_matrix_loop)
    _lev_distance_jit = njit(cache=True)(_lev_distance_loop)
    _viterbi_dp_jit = njit(cache=True)(_viterbi_dp_loop)
    _window_intersections_jit = njit(cache=True)(_window_intersections_impl)


def levenshtein_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    if USE_NUMBA:
        return _lev_matrix_jit(a, b)
    return _lev_matrix_np(a, b)


def levenshtein_distance_ids(a: np.ndarray, b: np.ndarray) -> int:
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    if USE_NUMBA:
        return int(_lev_distance_jit(a, b))
    return _lev_distance_np(a, b)


def levenshtein_ops(a: np.ndarray, b: np.ndarray) -> tuple[int, np.ndarray]:
    """Distance plus the edit-op sequence rebuilding ``b`` from ``a``."""
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    d = levenshtein_matrix(a, b)
    return int(d[len(a), len(b)]), _lev_backtrace(a, b, d)


def ctc_viterbi(emit: np.ndarray, skip_ok: np.ndarray) -> tuple[np.ndarray, float]:
    """Best CTC state path through ``emit`` (T x S state log-probs).

    ``skip_ok[s]`` marks states reachable by the two-step skip. Returns
    the canonical state sequence and its score (right-to-left sum).
    """
    emit = np.ascontiguousarray(emit, dtype=np.float64)
    skip_ok = np.ascontiguousarray(skip_ok, dtype=np.bool_)
    if USE_NUMBA:
        db = _viterbi_dp_jit(emit, skip_ok)
    else:
        db = _viterbi_dp_np(emit, skip_ok)
    s_len = emit.shape[1]
    score = db[0, 0] if (s_len < 2 or db[0, 0] >= db[0, 1]) else db[0, 1]
    states = _viterbi_walk(db, skip_ok)
    return states, float(score)


def window_intersections(ref_ids: np.ndarray, win_counts: np.ndarray, wlen: int) -> np.ndarray:
    """Multiset-intersection size of a fixed histogram against every
    length-``wlen`` window of ``ref_ids``."""
    ref_ids = np.ascontiguousarray(ref_ids, dtype=np.int32)
    win_counts = np.ascontiguousarray(win_counts, dtype=np.int32)
    n_positions = len(ref_ids) - wlen + 1
    if n_positions <= 0:
        return np.empty(0, dtype=np.int32)
    out = np.empty(n_positions, dtype=np.int32)
    if USE_NUMBA:
        return _window_intersections_jit(ref_ids, win_counts, wlen, n_positions, out)
    return _window_intersections_impl(ref_ids, win_counts, wlen, n_positions, out)
