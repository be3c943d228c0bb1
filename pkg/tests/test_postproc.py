import pytest

from longalign.ctc_decode import greedy_decode
from longalign.errors import InconsistentInputs
from longalign.matcher import MatchParams, match_sequences
from longalign.postproc import (AlignedSpeech, FileRecord, RefStream,
                                SpeechRef, UnalignedSpeech, UnmatchedAsr,
                                align_spans, assemble, cer, error_rate, wer)
from longalign.textnorm import ascii_config, normalize

from conftest import onehot_logits, sym_ids


def test_error_rates():
    assert cer("abc", "abc") == 0.0
    assert cer("abcd", "abed") == 0.25
    assert cer("", "") == 0.0
    assert cer("", "xy") == 2.0  # infinity-sentinel: above any threshold
    assert wer("a b c".split(), "a x c".split()) == pytest.approx(1 / 3)
    assert error_rate([], []) == 0.0


def make_ref_stream(texts_with_ids):
    config = ascii_config()
    speeches = [
        SpeechRef(sid, text, normalize(text, config))
        for sid, text in texts_with_ids
    ]
    return RefStream.build(speeches)


def run_front_half(spoken, ref_texts, pad_frames=0):
    """Decode one-hot audio of ``spoken`` and match against the corpus."""
    seq = []
    if pad_frames:
        seq.extend([0] * pad_frames)
    seq.extend(sym_ids(spoken))
    logits = onehot_logits(seq)
    hyp = greedy_decode(logits)
    ref = make_ref_stream(ref_texts)
    spans, _ = match_sequences(hyp.text.split(), ref.tokens,
                               MatchParams(window=4, stride=2, char_level_below=2))
    alignments = align_spans(logits, hyp, spans, ref)
    return logits, hyp, ref, spans, alignments


def test_fully_matched_single_speech():
    logits, hyp, ref, spans, alignments = run_front_half(
        "gre min ta", [("sp1", "Gre min ta.")])
    record = assemble("audio1", hyp, spans, alignments, ref, logits.end_offset_ms)
    assert len(record.entries) == 1
    entry = record.entries[0]
    assert isinstance(entry, AlignedSpeech)
    assert entry.speech_id == "sp1"
    assert entry.cer == 0.0 and entry.wer == 0.0
    assert [w.word for w in entry.words] == ["Gre", "min", "ta"]
    assert entry.words[0].char_start == 0 and entry.words[0].char_end == 3
    # original text round trip: word char ranges slice the speech text
    for w in entry.words:
        assert entry.text[w.char_start:w.char_end] == w.word


def test_leading_unmatched_audio_becomes_entry():
    logits, hyp, ref, spans, alignments = run_front_half(
        "zoq wek xum vip gre min ta lo", [("sp1", "Gre min ta lo.")])
    record = assemble("audio1", hyp, spans, alignments, ref, logits.end_offset_ms)
    kinds = [type(e).__name__ for e in record.entries]
    assert kinds == ["UnmatchedAsr", "AlignedSpeech"]
    unmatched = record.entries[0]
    assert unmatched.text.split() == ["zoq", "wek", "xum", "vip"]
    assert unmatched.start_ms < record.entries[1].words[0].start_ms


def test_absent_speech_preserved_as_unaligned():
    logits, hyp, ref, spans, alignments = run_front_half(
        "gre min ta lo", [("sp1", "Gre min ta lo."), ("sp2", "Never spoken words here.")])
    record = assemble("audio1", hyp, spans, alignments, ref, logits.end_offset_ms)
    unaligned = [e for e in record.entries if isinstance(e, UnalignedSpeech)]
    assert [u.speech_id for u in unaligned] == ["sp2"]
    # it rides after its aligned corpus neighbor
    assert isinstance(record.entries[0], AlignedSpeech)


def test_word_times_track_audio_offsets():
    logits, hyp, ref, spans, alignments = run_front_half(
        "gre min", [("sp1", "Gre min.")], pad_frames=10)
    record = assemble("audio1", hyp, spans, alignments, ref, logits.end_offset_ms)
    words = record.entries[0].words
    assert words[0].start_ms == 10 * logits.frame_duration_ms
    for a, b in zip(words, words[1:]):
        assert b.start_ms >= a.end_ms
        assert b.char_start >= a.char_end


def test_speech_ids_unique_across_entries():
    logits, hyp, ref, spans, alignments = run_front_half(
        "gre min ta lo", [("sp1", "Gre min ta lo."), ("sp2", "Other."), ("sp3", "More.")])
    record = assemble("audio1", hyp, spans, alignments, ref, logits.end_offset_ms)
    ids = [e.speech_id for e in record.entries if not isinstance(e, UnmatchedAsr)]
    assert sorted(ids) == ["sp1", "sp2", "sp3"]
    assert len(set(ids)) == len(ids)


def test_entry_time_extents_disjoint():
    logits, hyp, ref, spans, alignments = run_front_half(
        "zoq wek vip wum gre min ta lo pev qov rek suv", [("sp1", "Gre min ta lo.")])
    record = assemble("audio1", hyp, spans, alignments, ref, logits.end_offset_ms)
    extents = []
    for e in record.entries:
        if isinstance(e, UnmatchedAsr):
            extents.append((e.start_ms, e.end_ms))
        elif isinstance(e, AlignedSpeech) and e.words:
            extents.append((e.words[0].start_ms, e.words[-1].end_ms))
    extents.sort()
    for (s1, e1), (s2, e2) in zip(extents, extents[1:]):
        assert s2 >= e1


def test_inconsistent_span_rejected():
    logits, hyp, ref, spans, alignments = run_front_half(
        "gre min", [("sp1", "Gre min.")])
    bad = [a for a in alignments]
    bad[0] = type(bad[0])(bad[0].span_index,
                          [(999, 0.0, 20.0)])  # reference token out of range
    with pytest.raises(InconsistentInputs):
        assemble("audio1", hyp, spans, bad, ref, logits.end_offset_ms)


def test_alignment_beyond_logits_rejected():
    logits, hyp, ref, spans, alignments = run_front_half(
        "gre min", [("sp1", "Gre min.")])
    bad = [type(a)(a.span_index, [(j, s, e + 1e9) for j, s, e in a.word_times])
           for a in alignments]
    with pytest.raises(InconsistentInputs):
        assemble("audio1", hyp, spans, bad, ref, logits.end_offset_ms)


def test_record_json_round_trip():
    logits, hyp, ref, spans, alignments = run_front_half(
        "zoq wek ruv sip gre min ta lo", [("sp1", "Gre min ta lo."), ("sp2", "Unseen.")])
    record = assemble("audio1", hyp, spans, alignments, ref, logits.end_offset_ms)
    clone = FileRecord.from_json(record.to_json())
    assert clone.to_json() == record.to_json()
    assert clone.audio_id == "audio1"
    assert clone.asr_token_count == record.asr_token_count
