"""Wall-clock comparison of the numba kernels against the NumPy fallback.

Runs each hot kernel on production-shaped inputs with both
implementations, checks they agree, and reports mean/std over repeats.
If numba is unavailable (or LONGALIGN_NO_NUMBA=1) only the NumPy path is
measured.

Run:

    python benchmarks/bench_kernels.py
"""

import statistics
import time

import numpy as np

from longalign import kernels

REPEATS = 5


def timed(fn, *args, repeats=REPEATS):
    # warm-up run covers JIT compilation and cache effects
    result = fn(*args)
    durations = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        durations.append(time.perf_counter() - t0)
    return result, statistics.mean(durations), statistics.pstdev(durations)


def report(name, numpy_stats, numba_stats):
    mean_np, std_np = numpy_stats
    print(f"{name:28s} numpy  {mean_np * 1e3:9.2f} ms ± {std_np * 1e3:6.2f}")
    if numba_stats is not None:
        mean_nb, std_nb = numba_stats
        print(f"{'':28s} numba  {mean_nb * 1e3:9.2f} ms ± {std_nb * 1e3:6.2f}"
              f"   ({mean_np / mean_nb:5.1f}x)")


def bench_viterbi(rng):
    # one matched span: ~2500 frames against a 240-char expansion
    t_len, n_chars = 2500, 120
    emit = np.log(rng.dirichlet(np.ones(2 * n_chars + 1), size=t_len))
    skip_ok = np.zeros(2 * n_chars + 1, dtype=bool)
    skip_ok[3::2] = rng.random(len(skip_ok[3::2])) < 0.8
    np_out, *np_stats = timed(kernels._viterbi_dp_np, emit, skip_ok)
    nb_stats = None
    if kernels.USE_NUMBA:
        nb_out, *nb = timed(kernels._viterbi_dp_jit, emit, skip_ok)
        assert np.array_equal(np_out, nb_out)
        nb_stats = nb
    report("viterbi dp (2500x241)", np_stats, nb_stats)


def bench_levenshtein(rng):
    a = rng.integers(0, 50, size=400).astype(np.int32)
    b = rng.integers(0, 50, size=400).astype(np.int32)
    np_out, *np_stats = timed(kernels._lev_matrix_np, a, b)
    nb_stats = None
    if kernels.USE_NUMBA:
        nb_out, *nb = timed(kernels._lev_matrix_jit, a, b)
        assert np.array_equal(np_out, nb_out)
        nb_stats = nb
    report("levenshtein matrix (400x400)", np_stats, nb_stats)


def bench_window_intersections(rng):
    ref = rng.integers(0, 2000, size=20_000).astype(np.int32)
    window = rng.integers(0, 2000, size=20).astype(np.int32)
    counts = np.bincount(window, minlength=2000).astype(np.int32)
    wlen = 20
    n_pos = len(ref) - wlen + 1

    def run_np():
        out = np.empty(n_pos, dtype=np.int32)
        return kernels._window_intersections_impl(ref, counts, wlen, n_pos, out)

    np_out, *np_stats = timed(run_np)
    nb_stats = None
    if kernels.USE_NUMBA:
        def run_nb():
            out = np.empty(n_pos, dtype=np.int32)
            return kernels._window_intersections_jit(ref, counts, wlen, n_pos, out)

        nb_out, *nb = timed(run_nb)
        assert np.array_equal(np_out, nb_out)
        nb_stats = nb
    report("window hist (20k ref, w=20)", np_stats, nb_stats)


def main():
    rng = np.random.default_rng(0)
    if kernels.USE_NUMBA:
        print("numba path active; comparing against the NumPy fallback\n")
    else:
        print("numba disabled or unavailable; measuring the NumPy path only\n")
    bench_viterbi(rng)
    bench_levenshtein(rng)
    bench_window_intersections(rng)


if __name__ == "__main__":
    main()
