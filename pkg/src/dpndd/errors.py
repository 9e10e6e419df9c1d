"""Exception types shared across the package."""


class DpnddError(Exception):
    """Base class for all package errors."""


class ConfigError(DpnddError):
    """Invalid or missing configuration (bad paths, malformed config files)."""


class BackendUnavailable(DpnddError):
    """No cache hit and the inference service could not be reached."""


class VocabMismatch(DpnddError):
    """Backend returned a distribution whose length differs from the configured vocabulary size."""


class DimensionMismatch(DpnddError):
    """Two vectors that must have equal length do not."""


class InvalidRange(DpnddError):
    """Substitution or span bounds violate 1 <= start <= end <= length."""


class EmptyOverlap(DpnddError):
    """A substitution leaves no unedited positions to pool over."""


class EmptyLexicon(DpnddError):
    """A POS lexicon contains no entries."""


class NoMoldForLabel(DpnddError):
    """The mold registry has no mold for the requested label."""


class EmptyTreebank(DpnddError):
    """An operation requiring at least one sentence received none."""


class MalformedBracket(DpnddError):
    """Unparseable bracketed tree text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class SentenceCountMismatch(DpnddError):
    """Predicted and gold treebanks have different sentence counts."""


class SpanSetMismatch(DpnddError):
    """Predicted and gold span sets differ where identical sets are required."""


class InsufficientSpans(DpnddError):
    """Too few spans of some label to sample substitution pairs."""


class CacheCorruption(DpnddError):
    """A cache file record failed its checksum or length check."""
