"""Reference-text normalization with an exact offset map back to the original.

Normalization lowercases, drops punctuation, rewrites whitespace variants
to single spaces and expands numeral tokens through a lexicon. Every
character of the normalized string remembers the original character range
it came from, so word time offsets found on normalized text can be
projected back onto the raw transcript.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import RangeError, UnmappableCharacter

Range = tuple[int, int]


@dataclass(frozen=True)
class NormConfig:
    """Character policy for one language/corpus.

    alphabet: characters allowed to appear in normalized output (must
        include the space and every character used by lexicon expansions).
    lexicon: exact-match numeral/symbol token -> spelled-out words.
    drop_chars: removed outright (punctuation).
    space_chars: rewritten to a single space.
    """

    alphabet: frozenset[str]
    lexicon: dict[str, tuple[str, ...]] = field(default_factory=dict)
    drop_chars: frozenset[str] = frozenset()
    space_chars: frozenset[str] = frozenset()

    def __post_init__(self):
        if " " not in self.alphabet:
            raise ValueError("alphabet must contain the space character")
        for token, words in self.lexicon.items():
            for ch in "".join(words):
                if ch not in self.alphabet:
                    raise ValueError(
                        f"lexicon expansion for {token!r} uses {ch!r} outside the alphabet"
                    )
        if self.alphabet & self.drop_chars or self.alphabet & self.space_chars \
                or self.drop_chars & self.space_chars:
            raise ValueError("alphabet, drop_chars and space_chars must be disjoint")

    @classmethod
    def from_json(cls, path: str | Path) -> "NormConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            alphabet=frozenset(raw["alphabet"]),
            lexicon={k: tuple(v) for k, v in raw.get("lexicon", {}).items()},
            drop_chars=frozenset(raw.get("drop", "")),
            space_chars=frozenset(raw.get("space", "")),
        )


def ascii_config(extra_lexicon: dict[str, tuple[str, ...]] | None = None) -> NormConfig:
    """Latin-lowercase config covering the synthetic corpora and tests."""
    return NormConfig(
        alphabet=frozenset("abcdefghijklmnopqrstuvwxyz "),
        lexicon=dict(extra_lexicon or {}),
        drop_chars=frozenset(".,!?;:()[]\"'%&*+-/=<>@#_~`{}|\\"),
        space_chars=frozenset("\t\n\r "),
    )


@dataclass(frozen=True)
class NormalizedText:
    """A normalized string plus per-character original ranges."""

    norm: str
    map: tuple[Range, ...]

    def __post_init__(self):
        if len(self.map) != len(self.norm):
            raise ValueError("offset map length must equal normalized length")


def _is_space(ch: str, config: NormConfig) -> bool:
    return ch == " " or ch in config.space_chars


def _norm_token(token: str, start: int, config: NormConfig) -> tuple[str, list[Range]]:
    """Normalize one whitespace-free token, producing (text, ranges)."""
    lexed = config.lexicon.get(token)
    lex_range: Range | None = (start, start + len(token)) if lexed else None
    if lexed is None:
        # retry with surrounding punctuation stripped ("3," -> "3")
        lo, hi = 0, len(token)
        while lo < hi and token[lo] in config.drop_chars:
            lo += 1
        while hi > lo and token[hi - 1] in config.drop_chars:
            hi -= 1
        if lo > 0 or hi < len(token):
            lexed = config.lexicon.get(token[lo:hi])
            lex_range = (start + lo, start + hi) if lexed else None
    if lexed is not None:
        text = " ".join(lexed)
        return text, [lex_range] * len(text)

    out: list[str] = []
    ranges: list[Range] = []
    for i, ch in enumerate(token):
        if ch in config.drop_chars:
            continue
        for low in ch.lower():
            if low not in config.alphabet:
                raise UnmappableCharacter(ch, start + i)
            out.append(low)
            ranges.append((start + i, start + i + 1))
    return "".join(out), ranges


def normalize(text: str, config: NormConfig) -> NormalizedText:
    """Normalize ``text`` keeping a per-character map to original offsets."""
    pieces: list[str] = []
    ranges: list[Range] = []
    i, n = 0, len(text)
    last_end = None  # original end offset of the last emitted token
    while i < n:
        if _is_space(text[i], config):
            i += 1
            continue
        j = i
        while j < n and not _is_space(text[j], config):
            j += 1
        tok_text, tok_ranges = _norm_token(text[i:j], i, config)
        if tok_text:
            if pieces:
                pieces.append(" ")
                ranges.append((last_end, i))
            pieces.append(tok_text)
            ranges.extend(tok_ranges)
            last_end = j
        i = j
    return NormalizedText("".join(pieces), tuple(ranges))


def project_span(nt: NormalizedText, norm_start: int, norm_end: int) -> Range:
    """Smallest original-character interval covering a normalized span."""
    if not (0 <= norm_start < norm_end <= len(nt.norm)):
        raise RangeError(
            f"span [{norm_start}, {norm_end}) outside normalized length {len(nt.norm)}"
        )
    spans = nt.map[norm_start:norm_end]
    return min(s for s, _ in spans), max(e for _, e in spans)
