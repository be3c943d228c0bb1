"""Batch alignment of long audio to long, reordered, incomplete transcripts."""

from .ctc_align import AlignmentPath, force_align, word_offsets
from .ctc_decode import DecodedHypothesis, beam_decode, greedy_decode
from .lgts import LogitMatrix, read_lgts, write_lgts
from .matcher import (CoverageStats, MatchParams, MatchSpan, candidate_search,
                      levenshtein, match_sequences, pair_recordings)
from .ngram_lm import ArpaModel, read_arpa, train, write_arpa
from .postproc import FileRecord, WordAlignment, assemble, cer, wer
from .textnorm import NormConfig, NormalizedText, normalize, project_span
from .vad import SpeechSegment, filter_segments, rms_dbfs

__version__ = "0.1.0"

__all__ = [
    "AlignmentPath", "ArpaModel", "CoverageStats", "DecodedHypothesis",
    "FileRecord", "LogitMatrix", "MatchParams", "MatchSpan", "NormConfig",
    "NormalizedText", "SpeechSegment", "WordAlignment", "assemble",
    "beam_decode", "candidate_search", "cer", "filter_segments", "force_align",
    "greedy_decode", "levenshtein", "match_sequences", "normalize",
    "pair_recordings", "project_span", "read_arpa", "read_lgts", "rms_dbfs",
    "train", "wer", "word_offsets", "write_arpa", "write_lgts",
]
