"""Speech- and sentence-level filtering, playback resegmentation, stats.

Filtering runs in three passes: drop unaligned or grossly mistranscribed
speeches (CER >= 0.60), drop sentences whose CER exceeds 0.10, and drop
sentences whose seconds-per-character ratio exceeds 0.2 (audio stretched
over breaks). Boundary semantics follow the wording exactly: the speech
threshold drops at equality, the sentence thresholds keep at equality.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .postproc import AlignedSpeech, FileRecord, WordAlignment, cer
from .textnorm import NormConfig, normalize

SPEECH_MAX_CER = 0.60
SENTENCE_MAX_CER = 0.10
MAX_SECONDS_PER_CHAR = 0.2
CHUNK_MIN_S = 3.0
CHUNK_MAX_S = 6.0


@dataclass
class SentenceRecord:
    sentence_id: str
    speech_id: str
    audio_path: str
    text: str
    words: list[WordAlignment]  # char offsets relative to the sentence text
    duration_ms: float
    cer: float
    speaker: dict = field(default_factory=dict)
    asr_runs: list[tuple[int, int]] = field(default_factory=list)  # file ASR token runs

    def to_json(self) -> dict:
        return {
            "id": self.sentence_id,
            "speech_id": self.speech_id,
            "audio": self.audio_path,
            "text": self.text,
            "words": [
                {"w": w.word, "cs": w.char_start, "ce": w.char_end,
                 "ms_s": w.start_ms, "ms_e": w.end_ms}
                for w in self.words
            ],
            "duration_ms": self.duration_ms,
            "cer": self.cer,
            "speaker": self.speaker,
            "asr_runs": [list(r) for r in self.asr_runs],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "SentenceRecord":
        words = [WordAlignment(w["w"], w["cs"], w["ce"], w["ms_s"], w["ms_e"])
                 for w in raw["words"]]
        return cls(raw["id"], raw["speech_id"], raw["audio"], raw["text"], words,
                   raw["duration_ms"], raw["cer"], raw.get("speaker", {}),
                   [tuple(r) for r in raw.get("asr_runs", [])])


# ---------------------------------------------------------------------------
# Speech-level filter
# ---------------------------------------------------------------------------

def filter_speeches(
    records: list[FileRecord], max_cer: float = SPEECH_MAX_CER
) -> list[tuple[FileRecord, AlignedSpeech]]:
    """Aligned speeches with CER strictly below the cutoff (>= drops)."""
    kept = []
    for record in records:
        for entry in record.entries:
            if isinstance(entry, AlignedSpeech) and entry.cer < max_cer:
                kept.append((record, entry))
    return kept


# ---------------------------------------------------------------------------
# Sentence splitting
# ---------------------------------------------------------------------------

def _abbrev_before(text: str, punct: int) -> bool:
    """Short all-lowercase token right before the terminator ("dr.")."""
    j = punct
    while j > 0 and text[j - 1].isalpha():
        j -= 1
    word = text[j:punct]
    return 0 < len(word) <= 3 and word.islower()


def split_sentences(
    text: str, boundaries: list[tuple[int, int]] | None = None
) -> list[tuple[int, int]]:
    """Corpus-provided sentence spans, else terminal-punctuation fallback.

    The fallback splits after ``. ! ?`` followed by whitespace and an
    uppercase letter, except after short lowercase abbreviations; that
    misses sentence breaks following e.g. "dr." by design.
    """
    if boundaries:
        return [tuple(b) for b in boundaries]
    spans: list[tuple[int, int]] = []
    start, i, n = 0, 0, len(text)
    while i < n:
        if text[i] in ".!?":
            j = i
            while j + 1 < n and text[j + 1] in ".!?":
                j += 1
            k = j + 1
            while k < n and text[k].isspace():
                k += 1
            if k < n and k > j + 1 and text[k].isupper() and not _abbrev_before(text, i):
                spans.append((start, j + 1))
                start = k
            i = j + 1
        else:
            i += 1
    if start < n:
        spans.append((start, n))
    trimmed = []
    for lo, hi in spans:
        while lo < hi and text[lo].isspace():
            lo += 1
        while hi > lo and text[hi - 1].isspace():
            hi -= 1
        if hi > lo:
            trimmed.append((lo, hi))
    return trimmed


# ---------------------------------------------------------------------------
# Sentence record construction
# ---------------------------------------------------------------------------

def build_sentence_records(
    record: FileRecord,
    speech: AlignedSpeech,
    asr_tokens: list[str],
    norm_config: NormConfig,
    sentences: list[tuple[int, int]] | None = None,
    speaker: dict | None = None,
    audio_suffix: str = ".wav",
) -> list[SentenceRecord]:
    """One record per sentence covered by word alignments."""
    spans = split_sentences(speech.text, sentences)
    out: list[SentenceRecord] = []
    for k, (cs, ce) in enumerate(spans):
        words = [w for w in speech.words if cs <= w.char_start and w.char_end <= ce]
        if not words or not _monotone(words):
            continue
        asr_ids = sorted({w.asr_index for w in words if w.asr_index is not None})
        # slice per contiguous run; a stray pairing into a remote span must
        # not drag the whole interval in between into the slice
        runs = _index_runs(asr_ids, max_gap=3)
        hyp_text = " ".join(" ".join(asr_tokens[lo:hi]) for lo, hi in runs)
        ref_text = normalize(speech.text[cs:ce], norm_config).norm
        rebased = [
            WordAlignment(w.word, w.char_start - cs, w.char_end - cs,
                          w.start_ms, w.end_ms, w.asr_index)
            for w in words
        ]
        out.append(SentenceRecord(
            sentence_id=f"{speech.speech_id}:{k}",
            speech_id=speech.speech_id,
            audio_path=f"{record.audio_id}{audio_suffix}",
            text=speech.text[cs:ce],
            words=rebased,
            duration_ms=words[-1].end_ms - words[0].start_ms,
            cer=cer(ref_text, hyp_text),
            speaker=dict(speaker or {}),
            asr_runs=runs,
        ))
    return out


def _index_runs(ids: list[int], max_gap: int) -> list[tuple[int, int]]:
    """Contiguous [lo, hi) runs over sorted indices, splitting at gaps."""
    runs: list[tuple[int, int]] = []
    for i in ids:
        if runs and i < runs[-1][1] + max_gap:
            runs[-1] = (runs[-1][0], i + 1)
        else:
            runs.append((i, i + 1))
    return runs


def _monotone(words: list[WordAlignment]) -> bool:
    for a, b in zip(words, words[1:]):
        if b.char_start < a.char_end or b.start_ms < a.end_ms:
            return False
    return all(w.char_end > w.char_start and w.end_ms > w.start_ms for w in words)


# ---------------------------------------------------------------------------
# Sentence-level filters
# ---------------------------------------------------------------------------

def filter_sentence_cer(
    sentences: list[SentenceRecord], max_cer: float = SENTENCE_MAX_CER
) -> list[SentenceRecord]:
    """Keep sentences with CER at or below the cutoff (> drops)."""
    return [s for s in sentences if s.cer <= max_cer]


def filter_sentence_ratio(
    sentences: list[SentenceRecord], max_ratio: float = MAX_SECONDS_PER_CHAR
) -> list[SentenceRecord]:
    """Keep sentences whose seconds-per-character ratio is <= the cutoff."""
    kept = []
    for s in sentences:
        chars = len(s.text)
        if chars == 0:
            continue
        if (s.duration_ms / 1000.0) / chars <= max_ratio:
            kept.append(s)
    return kept


# ---------------------------------------------------------------------------
# Playback resegmentation
# ---------------------------------------------------------------------------

def resegment(
    sentence: SentenceRecord, min_s: float = CHUNK_MIN_S, max_s: float = CHUNK_MAX_S
) -> list[dict]:
    """Split a sentence into whole-word playback chunks of roughly
    ``min_s``..``max_s`` seconds; short sentences pass through whole."""
    words = sentence.words
    max_ms = max_s * 1000.0
    duration = words[-1].end_ms - words[0].start_ms
    if duration <= max_ms:
        groups = [words]
    else:
        n_chunks = math.ceil(duration / max_ms)
        target = duration / n_chunks
        groups = []
        cur = [words[0]]
        for w in words[1:]:
            cur_dur = cur[-1].end_ms - cur[0].start_ms
            if cur_dur >= target or (w.end_ms - cur[0].start_ms) > max_ms:
                groups.append(cur)
                cur = [w]
            else:
                cur.append(w)
        groups.append(cur)
    chunks = []
    for k, group in enumerate(groups):
        dur = group[-1].end_ms - group[0].start_ms
        chunks.append({
            "id": f"{sentence.sentence_id}#{k}",
            "sentence_id": sentence.sentence_id,
            "audio": sentence.audio_path,
            "start_ms": group[0].start_ms,
            "end_ms": group[-1].end_ms,
            "text": sentence.text[group[0].char_start:group[-1].char_end],
            "over_max": dur > max_ms + 1e-9,
        })
    return chunks


# ---------------------------------------------------------------------------
# Dataset statistics and yield
# ---------------------------------------------------------------------------

def dataset_stats(records: list[SentenceRecord], audio_dir: str | Path | None = None) -> dict:
    """The six release-table metrics over retained sentence records."""
    durations = [r.duration_ms / 1000.0 for r in records]
    size = sum(len(json.dumps(r.to_json(), ensure_ascii=False).encode("utf-8")) + 1
               for r in records)
    if audio_dir is not None:
        seen = set()
        for r in records:
            if r.audio_path in seen:
                continue
            seen.add(r.audio_path)
            p = Path(audio_dir) / r.audio_path
            if p.exists():
                size += p.stat().st_size
    return {
        "size_bytes": size,
        "duration_h": sum(durations) / 3600.0,
        "sentences": len(records),
        "words": sum(len(r.words) for r in records),
        "characters": sum(len(r.text) for r in records),
        "median_sentence_s": statistics.median(durations) if durations else 0.0,
    }


def yield_rate(file_records: list[FileRecord], retained: list[SentenceRecord]) -> float:
    """Retained ASR tokens over all decoded ASR tokens."""
    total = sum(r.asr_token_count for r in file_records)
    if total == 0:
        return 0.0
    claimed: dict[str, set[int]] = {rec.audio_id: set() for rec in file_records}
    for s in retained:
        stem = Path(s.audio_path).stem
        if stem in claimed:
            for lo, hi in s.asr_runs:
                claimed[stem].update(range(lo, hi))
    matched = sum(len(v) for v in claimed.values())
    return matched / total
