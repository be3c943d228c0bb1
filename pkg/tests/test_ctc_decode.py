import numpy as np
import pytest

from longalign.ctc_decode import beam_decode, greedy_decode
from longalign.errors import InvalidSegment
from longalign.lgts import LogitMatrix
from longalign.ngram_lm import train

from conftest import VOCAB, onehot_logits, random_logits, sym_ids


def test_empty_matrix():
    m = LogitMatrix(np.zeros((0, 4), np.float32), VOCAB[:4], 0, 1, 20.0)
    hyp = greedy_decode(m)
    assert hyp.text == "" and hyp.words == [] and hyp.score == 0.0
    assert beam_decode(m).text == ""


def test_greedy_collapse_merges_repeats_and_drops_blanks():
    a, b = sym_ids("a")[0], sym_ids("b")[0]
    m = onehot_logits([0, a, a, 0, b])
    hyp = greedy_decode(m)
    assert hyp.text == "ab"
    assert len(hyp.words) == 1


def test_greedy_word_times_on_one_hot():
    m = onehot_logits(sym_ids("a b"))
    hyp = greedy_decode(m)
    assert hyp.text == "a b"
    assert [(w.word, w.start_ms, w.end_ms) for w in hyp.words] == [
        ("a", 0.0, 20.0), ("b", 40.0, 60.0)]


def test_word_times_respect_start_offset():
    m = onehot_logits(sym_ids("a b"))
    m.start_offset_ms = 1000.0
    hyp = greedy_decode(m)
    assert [(w.start_ms, w.end_ms) for w in hyp.words] == [(1000.0, 1020.0), (1040.0, 1060.0)]


def test_beam_equals_greedy_on_one_hot_with_lm():
    lm = train(["a b", "b a"])
    m = onehot_logits(sym_ids("a b"))
    hyp = beam_decode(m, lm=lm, alpha=0.3, beta=1.0, beam_width=8)
    assert hyp.text == "a b"


def test_beam_width_one_reduces_to_greedy():
    rng = np.random.default_rng(123)
    for _ in range(100):
        t_len = int(rng.integers(0, 40))
        v = int(rng.integers(2, 9))
        m = random_logits(rng, t_len, v)
        assert beam_decode(m, alpha=0, beta=0, beam_width=1).text == greedy_decode(m).text


def test_strong_lm_flips_ambiguous_decode():
    lm = train(["b b b", "b b"])
    x = np.log(np.array([[0.02, 0.03, 0.50, 0.45],
                         [0.94, 0.02, 0.02, 0.02]]))
    m = LogitMatrix(x.astype(np.float32), ["<blank>", "|", "a", "b"], 0, 1, 20.0)
    assert beam_decode(m, lm=None, alpha=0, beta=0, beam_width=8).text == "a"
    assert beam_decode(m, lm=lm, alpha=4.0, beta=0.0, beam_width=8).text == "b"


def test_segment_gating_blanks_outside_speech():
    # "a b" spelled twice; only the first occurrence lies inside a segment
    seq = sym_ids("a b") + [0, 0] + sym_ids(" a b")
    m = onehot_logits(seq)
    full = beam_decode(m, beam_width=4)
    gated = beam_decode(m, beam_width=4, segments=[(0.0, 60.0)])
    assert full.text == "a b a b"
    assert gated.text == "a b"


def test_invalid_segment_rejected():
    m = onehot_logits(sym_ids("a b"))
    with pytest.raises(InvalidSegment):
        beam_decode(m, segments=[(0.0, 10_000.0)])
    with pytest.raises(InvalidSegment):
        beam_decode(m, segments=[(50.0, 30.0)])


def test_beam_deterministic_across_calls():
    rng = np.random.default_rng(5)
    m = random_logits(rng, 30, 6)
    lm = train(["a b c", "b c d", "c d a"])
    first = beam_decode(m, lm=lm, beam_width=8)
    second = beam_decode(m, lm=lm, beam_width=8)
    assert first.text == second.text
    assert first.score == second.score
    assert first.words == second.words


def test_beam_word_invariants():
    rng = np.random.default_rng(17)
    for _ in range(30):
        m = random_logits(rng, int(rng.integers(1, 40)), 5)
        hyp = beam_decode(m, beam_width=4)
        assert " ".join(w.word for w in hyp.words) == hyp.text
        for w in hyp.words:
            assert w.end_ms > w.start_ms
            assert w.start_ms % m.frame_duration_ms == 0.0
        for a, b in zip(hyp.words, hyp.words[1:]):
            assert b.start_ms >= a.end_ms
