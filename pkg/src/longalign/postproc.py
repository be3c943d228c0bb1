"""Fuse decoder output, match spans and forced alignments into file records.

Each audio file yields one record with three entry kinds: ASR text that
matched nothing in the corpus, corpus speeches that matched nothing in
the audio, and aligned speeches carrying word-level character offsets
(into the original, un-normalized text) and millisecond offsets, plus
character/word error rates of the aligned region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .ctc_align import force_align
from .ctc_decode import DecodedHypothesis
from .errors import InconsistentInputs, TooShortAudio
from .lgts import LogitMatrix
from .matcher import MatchSpan, levenshtein_distance
from .textnorm import NormalizedText, project_span


def error_rate(ref: list, hyp: list) -> float:
    """Edit distance over reference length; empty/empty is 0."""
    if not ref and not hyp:
        return 0.0
    return levenshtein_distance(ref, hyp) / max(len(ref), 1)


def cer(ref: str, hyp: str) -> float:
    return error_rate(list(ref), list(hyp))


def wer(ref: list[str], hyp: list[str]) -> float:
    return error_rate(ref, hyp)


# ---------------------------------------------------------------------------
# Reference token stream over corpus speeches
# ---------------------------------------------------------------------------

@dataclass
class SpeechRef:
    speech_id: str
    text: str
    norm: NormalizedText
    sentences: list[tuple[int, int]] | None = None  # original-char spans
    speaker: dict = field(default_factory=dict)


@dataclass
class RefStream:
    speeches: list[SpeechRef]
    tokens: list[str]
    token_speech: list[int]
    token_norm_range: list[tuple[int, int]]

    @classmethod
    def build(cls, speeches: list[SpeechRef]) -> "RefStream":
        tokens: list[str] = []
        token_speech: list[int] = []
        token_norm_range: list[tuple[int, int]] = []
        for idx, speech in enumerate(speeches):
            pos = 0
            for tok in speech.norm.norm.split(" "):
                if not tok:
                    continue
                start = speech.norm.norm.index(tok, pos)
                tokens.append(tok)
                token_speech.append(idx)
                token_norm_range.append((start, start + len(tok)))
                pos = start + len(tok)
        return cls(speeches, tokens, token_speech, token_norm_range)


# ---------------------------------------------------------------------------
# Record model
# ---------------------------------------------------------------------------

@dataclass
class WordAlignment:
    word: str
    char_start: int
    char_end: int
    start_ms: float
    end_ms: float
    asr_index: int | None = None

    def to_json(self) -> dict:
        return {
            "w": self.word, "cs": self.char_start, "ce": self.char_end,
            "ms_s": self.start_ms, "ms_e": self.end_ms, "asr_i": self.asr_index,
        }


@dataclass
class UnmatchedAsr:
    text: str
    start_ms: float
    end_ms: float
    asr_lo: int
    asr_hi: int

    def to_json(self) -> dict:
        return {
            "kind": "unmatched_asr", "text": self.text,
            "start_ms": self.start_ms, "end_ms": self.end_ms,
            "asr_lo": self.asr_lo, "asr_hi": self.asr_hi,
        }


@dataclass
class UnalignedSpeech:
    speech_id: str
    text: str

    def to_json(self) -> dict:
        return {"kind": "unaligned_speech", "speech_id": self.speech_id, "text": self.text}


@dataclass
class AlignedSpeech:
    speech_id: str
    text: str
    asr_text: str
    words: list[WordAlignment]
    cer: float
    wer: float

    def to_json(self) -> dict:
        return {
            "kind": "aligned_speech", "speech_id": self.speech_id, "text": self.text,
            "asr_text": self.asr_text, "cer": self.cer, "wer": self.wer,
            "words": [w.to_json() for w in self.words],
        }


@dataclass
class FileRecord:
    audio_id: str
    asr_token_count: int
    entries: list

    def to_json(self) -> dict:
        return {
            "audio_id": self.audio_id,
            "asr_token_count": self.asr_token_count,
            "entries": [e.to_json() for e in self.entries],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "FileRecord":
        entries = []
        for e in raw["entries"]:
            kind = e["kind"]
            if kind == "unmatched_asr":
                entries.append(UnmatchedAsr(e["text"], e["start_ms"], e["end_ms"],
                                            e["asr_lo"], e["asr_hi"]))
            elif kind == "unaligned_speech":
                entries.append(UnalignedSpeech(e["speech_id"], e["text"]))
            elif kind == "aligned_speech":
                words = [WordAlignment(w["w"], w["cs"], w["ce"], w["ms_s"], w["ms_e"],
                                       w.get("asr_i")) for w in e["words"]]
                entries.append(AlignedSpeech(e["speech_id"], e["text"], e["asr_text"],
                                             words, e["cer"], e["wer"]))
            else:
                raise InconsistentInputs(f"unknown entry kind {kind!r}")
        return cls(raw["audio_id"], raw["asr_token_count"], entries)


# ---------------------------------------------------------------------------
# Span alignment: word times on the reference side of each match span
# ---------------------------------------------------------------------------

@dataclass
class SpanAlignment:
    span_index: int
    # one (ref_token_index, start_ms, end_ms) per reference token in the span
    word_times: list[tuple[int, float, float]]

    def to_json(self) -> dict:
        return {"span_index": self.span_index,
                "word_times": [[i, s, e] for i, s, e in self.word_times]}


def _span_frame_bounds(hyp: DecodedHypothesis, span: MatchSpan,
                       logits: LogitMatrix) -> tuple[int, int]:
    lo, hi = span.asr_range
    start_ms = hyp.words[lo].start_ms
    end_ms = hyp.words[hi - 1].end_ms
    fd = logits.frame_duration_ms
    f0 = max(0, int(math.floor((start_ms - logits.start_offset_ms) / fd)))
    f1 = min(logits.num_frames, int(math.ceil((end_ms - logits.start_offset_ms) / fd)))
    return f0, f1


def align_spans(
    logits: LogitMatrix,
    hyp: DecodedHypothesis,
    spans: list[MatchSpan],
    ref: RefStream,
) -> list[SpanAlignment]:
    """Force-align each span's reference tokens and time them per word."""
    n_asr = len(hyp.words)
    out: list[SpanAlignment] = []
    bounds = [_span_frame_bounds(hyp, s, logits) for s in spans]
    for k, span in enumerate(spans):
        a_lo, a_hi = span.asr_range
        r_lo, r_hi = span.ref_range
        if not (0 <= a_lo < a_hi <= n_asr) or not (0 <= r_lo < r_hi <= len(ref.tokens)):
            raise InconsistentInputs(f"span {span} outside token streams")
        tokens = ref.tokens[r_lo:r_hi]
        f0, f1 = bounds[k]
        try:
            path = force_align(_slice_logits(logits, f0, f1), " ".join(tokens))
        except TooShortAudio:
            # widen into the unclaimed gaps next to this span and retry
            f0 = bounds[k - 1][1] if k > 0 else 0
            f1 = bounds[k + 1][0] if k + 1 < len(bounds) else logits.num_frames
            path = force_align(_slice_logits(logits, f0, f1), " ".join(tokens))
        word_times: list[tuple[int, float, float]] = []
        cursor = 0
        for j, tok in enumerate(tokens):
            chars = path.spans[cursor:cursor + len(tok)]
            start_f = f0 + chars[0].start_frame
            end_f = f0 + chars[-1].end_frame
            word_times.append((
                r_lo + j,
                logits.frame_to_ms(start_f),
                logits.frame_to_ms(end_f + 1),
            ))
            cursor += len(tok) + 1  # skip the delimiter char
        out.append(SpanAlignment(k, word_times))
    return out


def _slice_logits(logits: LogitMatrix, f0: int, f1: int) -> LogitMatrix:
    return LogitMatrix(
        frames=logits.frames[f0:f1],
        vocab=logits.vocab,
        blank_id=logits.blank_id,
        word_delim_id=logits.word_delim_id,
        frame_duration_ms=logits.frame_duration_ms,
        start_offset_ms=logits.start_offset_ms,
    )


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def assemble(
    audio_id: str,
    hyp: DecodedHypothesis,
    spans: list[MatchSpan],
    span_alignments: list[SpanAlignment],
    ref: RefStream,
    logits_end_ms: float,
) -> FileRecord:
    asr_tokens = [w.word for w in hyp.words]
    # repeated content lets several spans claim the same reference token;
    # resolve toward the span that covers most of that token's speech
    contrib: dict[tuple[int, int], int] = {}
    for sa in span_alignments:
        r_lo, r_hi = spans[sa.span_index].ref_range
        for j in range(r_lo, r_hi):
            if not (0 <= j < len(ref.tokens)):
                raise InconsistentInputs(f"reference token {j} out of range")
            key = (ref.token_speech[j], sa.span_index)
            contrib[key] = contrib.get(key, 0) + 1

    def claim_rank(j: int, span_index: int) -> tuple:
        span = spans[span_index]
        return (
            -contrib.get((ref.token_speech[j], span_index), 0),
            span.ref_range[0] - span.ref_range[1],
            span.asr_range,
        )

    times: dict[int, tuple[float, float]] = {}
    chosen_span: dict[int, int] = {}
    for sa in span_alignments:
        for j, start_ms, end_ms in sa.word_times:
            if not (0 <= j < len(ref.tokens)):
                raise InconsistentInputs(f"aligned reference token {j} out of range")
            if end_ms > logits_end_ms + 1e-6:
                raise InconsistentInputs(
                    f"aligned word at {end_ms} ms beyond logits end {logits_end_ms} ms"
                )
            if j not in times or claim_rank(j, sa.span_index) < claim_rank(j, chosen_span[j]):
                times[j] = (start_ms, end_ms)
                chosen_span[j] = sa.span_index
    paired_asr: dict[int, int] = {}  # ref token -> asr token
    for sa in span_alignments:
        for op in spans[sa.span_index].ops:
            if op.op in ("match", "sub") and chosen_span.get(op.b_index) == sa.span_index:
                paired_asr[op.b_index] = op.a_index

    # group matched reference tokens by speech
    by_speech: dict[int, list[int]] = {}
    for sa in span_alignments:
        r_lo, r_hi = spans[sa.span_index].ref_range
        for j in range(r_lo, r_hi):
            if not (0 <= j < len(ref.tokens)):
                raise InconsistentInputs(f"reference token {j} out of range")
            by_speech.setdefault(ref.token_speech[j], []).append(j)

    aligned_entries: dict[int, AlignedSpeech] = {}
    for s_idx, token_ids in sorted(by_speech.items()):
        speech = ref.speeches[s_idx]
        token_ids = sorted(set(token_ids))
        words: list[WordAlignment] = []
        for j in token_ids:
            if j not in times:
                continue
            n_lo, n_hi = ref.token_norm_range[j]
            c_lo, c_hi = project_span(speech.norm, n_lo, n_hi)
            start_ms, end_ms = times[j]
            words.append(WordAlignment(
                word=speech.text[c_lo:c_hi],
                char_start=c_lo,
                char_end=c_hi,
                start_ms=start_ms,
                end_ms=end_ms,
                asr_index=paired_asr.get(j),
            ))
        if not words:
            continue
        words.sort(key=lambda w: (w.char_start, w.start_ms))
        ref_norm_text = " ".join(ref.tokens[j] for j in token_ids)
        asr_ids = sorted({paired_asr[j] for j in token_ids if j in paired_asr})
        asr_text = " ".join(asr_tokens[i] for i in asr_ids)
        aligned_entries[s_idx] = AlignedSpeech(
            speech_id=speech.speech_id,
            text=speech.text,
            asr_text=asr_text,
            words=words,
            cer=cer(ref_norm_text, asr_text),
            wer=wer(ref_norm_text.split(), asr_text.split()),
        )

    # maximal unmatched ASR runs
    covered = [False] * len(asr_tokens)
    for span in spans:
        for i in range(*span.asr_range):
            covered[i] = True
    unmatched: list[UnmatchedAsr] = []
    i = 0
    while i < len(asr_tokens):
        if covered[i]:
            i += 1
            continue
        j = i
        while j < len(asr_tokens) and not covered[j]:
            j += 1
        unmatched.append(UnmatchedAsr(
            text=" ".join(asr_tokens[i:j]),
            start_ms=hyp.words[i].start_ms,
            end_ms=hyp.words[j - 1].end_ms,
            asr_lo=i,
            asr_hi=j,
        ))
        i = j

    # order: timed entries along the audio; unaligned speeches ride just
    # after the nearest preceding aligned speech from corpus order
    keyed: list[tuple[tuple, object]] = []
    for s_idx, entry in aligned_entries.items():
        keyed.append(((entry.words[0].start_ms, 0, 0, s_idx), entry))
    for u in unmatched:
        keyed.append(((u.start_ms, 0, 1, u.asr_lo), u))
    last_anchor: dict[int, float] = {}
    running = float("-inf")
    for s_idx in range(len(ref.speeches)):
        if s_idx in aligned_entries:
            running = aligned_entries[s_idx].words[0].start_ms
        last_anchor[s_idx] = running
    for s_idx, speech in enumerate(ref.speeches):
        if s_idx in aligned_entries:
            continue
        keyed.append(((last_anchor[s_idx], 1, 0, s_idx),
                      UnalignedSpeech(speech.speech_id, speech.text)))
    keyed.sort(key=lambda kv: kv[0])
    return FileRecord(audio_id, len(asr_tokens), [e for _, e in keyed])
