import os
import subprocess
import sys

import numpy as np

from longalign import kernels


def test_levenshtein_matrix_paths_agree():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.integers(0, 5, size=rng.integers(0, 25)).astype(np.int32)
        b = rng.integers(0, 5, size=rng.integers(0, 25)).astype(np.int32)
        assert np.array_equal(kernels._lev_matrix_np(a, b), kernels._lev_matrix_loop(a, b))


def test_levenshtein_distance_paths_agree():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.integers(0, 4, size=rng.integers(0, 30)).astype(np.int32)
        b = rng.integers(0, 4, size=rng.integers(0, 30)).astype(np.int32)
        assert kernels._lev_distance_np(a, b) == kernels._lev_distance_loop(a, b)


def test_viterbi_paths_agree_bitwise():
    rng = np.random.default_rng(2)
    for _ in range(30):
        t_len = int(rng.integers(1, 20))
        s_len = int(rng.integers(1, 15))
        emit = rng.normal(size=(t_len, s_len))
        skip_ok = rng.random(s_len) < 0.5
        skip_ok[:2] = False
        np_db = kernels._viterbi_dp_np(emit, skip_ok)
        loop_db = kernels._viterbi_dp_loop(emit, skip_ok)
        assert np.array_equal(np_db, loop_db)


def test_window_intersections_matches_counter():
    from collections import Counter
    rng = np.random.default_rng(3)
    for _ in range(25):
        ref = rng.integers(0, 6, size=rng.integers(5, 40)).astype(np.int32)
        wlen = int(rng.integers(1, min(8, len(ref) + 1)))
        win = rng.integers(0, 6, size=wlen).astype(np.int32)
        counts = np.bincount(win, minlength=6).astype(np.int32)
        got = kernels.window_intersections(ref, counts, wlen)
        for p in range(len(ref) - wlen + 1):
            expected = sum((Counter(win.tolist()) & Counter(ref[p:p + wlen].tolist())).values())
            assert got[p] == expected


def test_numpy_fallback_env_flag():
    code = (
        "import longalign.kernels as k; "
        "print(k.USE_NUMBA)"
    )
    env = dict(os.environ, LONGALIGN_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


def test_fallback_results_match_current_path():
    code = """
import numpy as np
import longalign.kernels as k
rng = np.random.default_rng(42)
a = rng.integers(0, 5, size=20).astype(np.int32)
b = rng.integers(0, 5, size=24).astype(np.int32)
d, ops = k.levenshtein_ops(a, b)
emit = rng.normal(size=(12, 9))
skip = np.zeros(9, dtype=bool); skip[3::2] = True
states, score = k.ctc_viterbi(emit, skip)
print(d, ops.tobytes().hex(), states.tobytes().hex(), repr(score))
"""
    runs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, LONGALIGN_NO_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        runs[flag] = out.stdout
    assert runs["0"] == runs["1"]
