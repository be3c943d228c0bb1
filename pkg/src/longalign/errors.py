"""Exception types raised across the alignment engine."""


class LongalignError(Exception):
    """Base class for all engine errors."""


class UnmappableCharacter(LongalignError):
    """A character is not covered by the normalization config.

    Raised instead of silently dropping pronounceable content; the
    offending character and its offset are carried for diagnostics.
    """

    def __init__(self, char: str, offset: int):
        self.char = char
        self.offset = offset
        super().__init__(f"unmappable character {char!r} at offset {offset}")


class RangeError(LongalignError):
    """An index or span is outside the addressable range."""


class DegenerateCorpus(LongalignError):
    """Count-of-counts leave the discount estimate undefined (n1 + 2*n2 == 0)."""


class ParseError(LongalignError):
    """Malformed serialized model or artifact."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidSegment(LongalignError):
    """A speech segment lies outside the decodable time range."""


class TooShortAudio(LongalignError):
    """The expanded reference cannot fit into the available frames."""


class UnknownSymbol(LongalignError):
    """A reference character is missing from the acoustic vocabulary."""


class EmptyWindow(LongalignError):
    """An RMS window contains no samples."""


class SegmentOutOfRange(LongalignError):
    """A segment addresses audio beyond the recording duration."""


class InconsistentInputs(LongalignError):
    """Stage inputs disagree (missing speech id, path outside logits range)."""


class MissingUpstream(LongalignError):
    """A pipeline stage was invoked without its upstream artifacts."""


class CorruptCache(LongalignError):
    """A cached artifact failed its checksum; the caller should recompute."""
