"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Every tolerance is pinned here; nothing is deferred.
"""

import hashlib
import json
import time
from pathlib import Path

import numpy as np
import pytest

from longalign.ctc_align import force_align, min_expanded_frames
from longalign.ctc_decode import beam_decode, greedy_decode
from longalign.filters import (SentenceRecord, filter_sentence_cer,
                               filter_sentence_ratio, filter_speeches)
from longalign.lgts import read_lgts
from longalign.matcher import levenshtein_distance
from longalign.ngram_lm import BOS, EOS, train
from longalign.pipeline import PipelineConfig, run_stage
from longalign.postproc import AlignedSpeech, FileRecord, WordAlignment
from longalign.synth import build_synthetic_dataset
from longalign.vad import SpeechSegment, filter_segments, rms_dbfs

from conftest import random_logits, sym_ids

DATA = Path(__file__).parent / "data"


def ok(n, message):
    print(f"[criterion {n}] PASS - {message}")


# -- 1. Levenshtein oracle equivalence ----------------------------------------

def naive_levenshtein(a, b):
    n, m = len(a), len(b)
    row = list(range(m + 1))
    for i in range(1, n + 1):
        prev = row
        row = [i] + [0] * m
        for j in range(1, m + 1):
            row[j] = min(prev[j] + 1, row[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] != b[j - 1]))
    return row[m]


def test_c1_levenshtein_oracle_1000_pairs():
    rng = np.random.default_rng(101)
    started = time.time()
    for _ in range(1000):
        a = [int(x) for x in rng.integers(0, 5, size=rng.integers(0, 31))]
        b = [int(x) for x in rng.integers(0, 5, size=rng.integers(0, 31))]
        assert levenshtein_distance(a, b) == naive_levenshtein(a, b)
    elapsed = time.time() - started
    assert elapsed < 5.0
    ok(1, f"1000 random pairs match the DP oracle exactly in {elapsed:.2f}s")


# -- 2. Viterbi forced-alignment oracle ----------------------------------------

def enumerate_ctc_paths(emit, skip_ok):
    """All valid CTC state paths; right-to-left scoring, ordered DFS, so
    the first maximum found is the lexicographically smallest argmax."""
    t_len, s_len = emit.shape
    best = [float("-inf"), None]

    def walk(t, s, path):
        if t == t_len:
            if s >= s_len - 2:
                score = 0.0
                for tt in range(t_len - 1, -1, -1):
                    score = emit[tt, path[tt]] + score
                if score > best[0]:
                    best[0], best[1] = score, list(path)
            return
        for ns in (s, s + 1, s + 2):
            if ns >= s_len or (ns == s + 2 and not skip_ok[ns]):
                continue
            path.append(ns)
            walk(t + 1, ns, path)
            path.pop()

    for start in (0, 1):
        if start < s_len:
            walk(1, start, [start])
    return best


def test_c2_forced_alignment_oracle_200_instances():
    rng = np.random.default_rng(202)
    letters = "abc"
    checked = 0
    while checked < 200:
        t_len = int(rng.integers(1, 9))
        v = int(rng.integers(3, 6))
        m = random_logits(rng, t_len, v)
        length = int(rng.integers(1, 4))
        ref = "".join(rng.choice(list(letters[:v - 2]), size=length))
        if min_expanded_frames(ref) > t_len:
            continue
        tokens = sym_ids(ref, m.vocab)
        s_len = 2 * len(tokens) + 1
        state_syms = np.empty(s_len, dtype=np.int64)
        state_syms[0::2] = m.blank_id
        state_syms[1::2] = tokens
        skip_ok = np.zeros(s_len, dtype=bool)
        for s in range(3, s_len, 2):
            skip_ok[s] = tokens[(s - 1) // 2] != tokens[(s - 3) // 2]
        emit = m.frames.astype(np.float64)[:, state_syms]
        oracle_score, oracle_path = enumerate_ctc_paths(emit, skip_ok)

        path = force_align(m, ref)
        assert path.score == pytest.approx(oracle_score, abs=1e-6)
        got = {}
        for idx, span in enumerate(path.spans):
            for t in range(span.start_frame, span.end_frame + 1):
                got[t] = 2 * idx + 1
        want = {t: s for t, s in enumerate(oracle_path) if s % 2 == 1}
        assert got == want
        checked += 1
    ok(2, "200 random instances match exhaustive path enumeration (1e-6, same argmax)")


# -- 3. Kneser-Ney correctness on the toy corpus -------------------------------

def test_c3_kneser_ney_hand_values():
    model = train(["a b", "a b", "a c"])
    hand = {
        ((), "a"): 0.176, ((), EOS): 0.376, ((), "zzz"): 0.096,
        (("a",), "b"): 0.176, (("a",), "c"): 0.176,
        ((BOS,), "a"): 0.7253333333333333,
        ((BOS, "a"), "b"): 0.5946666666666667,
        ((BOS, "a"), "c"): 0.2613333333333333,
        (("a", "b"), EOS): 0.896,
    }
    for (ctx, word), expected in hand.items():
        assert 10 ** model.logprob(ctx, word) == pytest.approx(expected, abs=1e-6)
    vocab = sorted(model.event_vocab())
    for ctx in [(), ("a",), ("b",), ("c",), (BOS,), (BOS, "a"),
                ("a", "b"), ("a", "c"), ("q", "w")]:
        total = sum(10 ** model.logprob(ctx, w) for w in vocab)
        assert total == pytest.approx(1.0, abs=1e-6)
    ok(3, "toy-corpus probabilities match hand-derived interpolated KN; contexts sum to 1")


# -- 4. Beam reduction to greedy ------------------------------------------------

def test_c4_beam_width_one_equals_greedy_500():
    rng = np.random.default_rng(404)
    for _ in range(500):
        t_len = int(rng.integers(0, 51))
        v = int(rng.integers(2, 9))
        m = random_logits(rng, t_len, v)
        assert beam_decode(m, lm=None, alpha=0.0, beta=0.0, beam_width=1).text == \
            greedy_decode(m).text
    ok(4, "beam(width=1, alpha=0, beta=0) equals greedy on 500 random matrices")


# -- 5. Synthetic end-to-end yield ----------------------------------------------

@pytest.fixture(scope="module")
def e2e_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    started = time.time()
    truth = build_synthetic_dataset(root, n_speeches=200, n_files=4, seed=99)
    config_path = root / "config.json"
    config_path.write_text(json.dumps({
        "paths": {"logits_dir": "logits", "segments_dir": "segments",
                  "corpus": "corpus.jsonl", "norm_config": "norm.json",
                  "output_dir": "out", "cache_dir": "cache"},
        "decoder": {"beam_width": 16, "token_min_logp": -7.0},
        "workers": 1,
    }), encoding="utf-8")
    run_stage("pipeline", PipelineConfig.from_file(config_path))
    elapsed = time.time() - started
    return root, truth, elapsed


def test_c5_synthetic_yield_and_word_offsets(e2e_run):
    root, truth, elapsed = e2e_run
    summary = json.loads((root / "out" / "filter_summary.json").read_text())
    assert summary["yield_rate"] == pytest.approx(0.75, abs=0.03)

    frame_ms = 20.0
    hit = miss = 0
    for line in (root / "out" / "dataset.jsonl").read_text().splitlines():
        record = json.loads(line)
        speech_id, k = record["id"].rsplit(":", 1)
        for i, w in enumerate(record["words"]):
            expected = truth.word_starts.get((speech_id, int(k), i))
            if expected is not None and abs(w["ms_s"] - expected) <= frame_ms + 1e-6:
                hit += 1
            else:
                miss += 1
    share = hit / (hit + miss)
    assert share >= 0.99
    assert elapsed < 120.0
    ok(5, f"yield {summary['yield_rate']:.4f} in 0.75±0.03; "
          f"{share:.2%} word starts within ±1 frame; {elapsed:.0f}s < 120s")


# -- 6. Filter boundary semantics ------------------------------------------------

def test_c6_filter_boundaries():
    word = [WordAlignment("w", 0, 1, 0.0, 500.0, 0)]
    records = [FileRecord("a", 4, [
        AlignedSpeech("cer59", "t", "h", word, 0.59, 0.0),
        AlignedSpeech("cer60", "t", "h", word, 0.60, 0.0),
    ])]
    assert [s.speech_id for _, s in filter_speeches(records)] == ["cer59"]

    def sent(cer_value, duration_ms, chars):
        return SentenceRecord("s:0", "s", "a.wav", "x" * chars, word,
                              duration_ms, cer_value, {}, [(0, 1)])

    kept = filter_sentence_cer([sent(0.10, 1000, 50), sent(0.101, 1000, 50)])
    assert [s.cer for s in kept] == [0.10]
    kept = filter_sentence_ratio([sent(0, 10_000, 50), sent(0, 10_500, 50)])
    assert [s.duration_ms for s in kept] == [10_000]
    ok(6, "boundaries: cer 0.59 keep/0.60 drop; 0.10 keep/0.101 drop; 0.2 keep/0.21 drop")


# -- 7. Determinism across worker counts ----------------------------------------

def test_c7_worker_count_determinism(tmp_path_factory):
    root = tmp_path_factory.mktemp("det")
    build_synthetic_dataset(root, n_speeches=40, n_files=2, seed=77)
    digests = {}
    for workers in (1, 8):
        tag = f"w{workers}"
        config_path = root / f"config_{tag}.json"
        config_path.write_text(json.dumps({
            "paths": {"logits_dir": "logits", "segments_dir": "segments",
                      "corpus": "corpus.jsonl", "norm_config": "norm.json",
                      "output_dir": f"out_{tag}", "cache_dir": f"cache_{tag}"},
            "decoder": {"beam_width": 8, "token_min_logp": -7.0},
            "workers": workers,
        }), encoding="utf-8")
        run_stage("pipeline", PipelineConfig.from_file(config_path))
        out = root / f"out_{tag}"
        digests[workers] = tuple(
            hashlib.sha256((out / name).read_bytes()).hexdigest()
            for name in ("dataset.jsonl", "chunks.jsonl")
        )
    assert digests[1] == digests[8]
    ok(7, "workers=1 and workers=8 produce byte-identical JSONL outputs")


# -- 8. Energy gate analytic fixtures --------------------------------------------

def test_c8_energy_gate_fixtures():
    rate = 16000
    t = np.arange(rate) / rate
    silence = np.zeros(rate)
    full_sine = np.sin(2 * np.pi * 100 * t)
    boundary = np.sqrt(2.0) * 10.0 ** (-45.0 / 20.0) * np.sin(2 * np.pi * 100 * t)

    assert rms_dbfs(silence) == float("-inf")
    assert rms_dbfs(full_sine) == pytest.approx(-3.0103, abs=1e-3)
    assert rms_dbfs(boundary) == pytest.approx(-45.0, abs=1e-9)

    audio = np.concatenate([silence, full_sine, boundary])
    segments = [SpeechSegment(0, 1000), SpeechSegment(1000, 2000),
                SpeechSegment(2000, 3000)]
    kept = filter_segments(segments, audio, rate)
    assert kept == [SpeechSegment(1000, 2000), SpeechSegment(2000, 3000)]
    ok(8, "silence removed; full-scale sine kept; boundary amplitude kept")


# -- 9. Exporter format conformance (fixture half; full check in exporter) -------

def test_c9_fixture_parses_and_decodes():
    m = read_lgts(DATA / "fixture_onehot_test.lgts")
    assert greedy_decode(m).text == "test"
    assert (m.num_frames, m.num_symbols) == (6, 5)
    assert m.blank_id == 0 and m.word_delim_id == 1 and m.frame_duration_ms == 20.0
    ok(9, "checked-in stub-model fixture parses and greedy-decodes to 'test'")
