"""Label-specific molds and the dual to-mold / from-mold span score.

A mold is a reference sentence with a marked constituent span and its label.
A candidate span is scored by substituting it into the mold span (to-mold)
and by substituting the mold span into the candidate's slot (from-mold);
the two divergences are summed, and the minimum over the label's molds is
the span's score.  Lower means more constituent-like for that label.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .errors import ConfigError, InvalidRange, NoMoldForLabel
from .ndd import Substitution, ndd
from .pos import PosProjection
from .provider import DistributionProvider
from .subword import Encoder, SentenceEncoding

DEFAULT_MOLD_CAP = 25


@dataclass(frozen=True)
class Mold:
    """Reference sentence, 1-based inclusive word span, constituent label."""

    tokens: tuple[str, ...]
    start: int
    end: int
    label: str
    utl: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        n = len(self.tokens)
        if not 1 <= self.start <= self.end <= n:
            raise InvalidRange(f"mold span {self.start}..{self.end} out of range for {n} words")
        if self.start == 1 and self.end == n:
            raise InvalidRange("mold span must be a proper subspan (no surrounding context)")


@dataclass(frozen=True)
class EncodedMold:
    """A mold with its subword encoding and span, expanded once at load."""

    mold: Mold
    encoding: SentenceEncoding
    span: tuple[int, int]

    @property
    def label(self) -> str:
        return self.mold.label

    @property
    def span_ids(self) -> tuple[int, ...]:
        lo, hi = self.span
        return self.encoding.ids[lo - 1:hi]


class MoldRegistry:
    """Molds grouped by label, optionally bound to a subword encoder."""

    def __init__(self, molds: Sequence[Mold], *, encoder: Encoder | None = None,
                 cap: int = DEFAULT_MOLD_CAP, allowed_labels: Iterable[str] | None = None):
        molds = list(molds)
        if not molds:
            raise ConfigError("mold registry is empty")
        if len(molds) > cap:
            raise ConfigError(f"{len(molds)} molds exceed the cap of {cap}")
        if allowed_labels is not None:
            allowed = set(allowed_labels)
            for mold in molds:
                if mold.label not in allowed:
                    raise ConfigError(f"mold label {mold.label!r} not in the configured label set")
        self._by_label: dict[str, list[Mold]] = {}
        for mold in molds:
            self._by_label.setdefault(mold.label, []).append(mold)
        self.labels: tuple[str, ...] = tuple(self._by_label)
        self._encoder = encoder
        self._encoded: dict[str, list[EncodedMold]] = {}
        if encoder is not None:
            self.bind(encoder)

    @classmethod
    def from_file(cls, path: str | os.PathLike, **kwargs) -> "MoldRegistry":
        with open(path, encoding="utf-8") as fh:
            entries = json.load(fh)
        return cls([_mold_from_dict(e) for e in entries], **kwargs)

    def bind(self, encoder: Encoder) -> "MoldRegistry":
        """Expand the word-level mold spans into subword space once."""
        self._encoder = encoder
        self._encoded = {}
        for label, molds in self._by_label.items():
            encoded = []
            for mold in molds:
                enc = encoder.encode(list(mold.tokens))
                encoded.append(EncodedMold(
                    mold=mold, encoding=enc, span=enc.span_for_words(mold.start, mold.end)))
            self._encoded[label] = encoded
        return self

    def raw_molds(self, label: str) -> list[Mold]:
        try:
            return list(self._by_label[label])
        except KeyError:
            raise NoMoldForLabel(f"no mold for label {label!r}") from None

    def molds_for(self, label: str, *, utl_only: bool = False) -> list[EncodedMold]:
        if self._encoder is None:
            raise ConfigError("registry has no encoder bound; call bind() first")
        try:
            encoded = self._encoded[label]
        except KeyError:
            raise NoMoldForLabel(f"no mold for label {label!r}") from None
        if utl_only:
            marked = [em for em in encoded if em.mold.utl]
            if marked:
                return marked
        return list(encoded)

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_label.values())


def _mold_from_dict(entry: dict) -> Mold:
    return Mold(tokens=tuple(entry["tokens"]), start=int(entry["start"]),
                end=int(entry["end"]), label=str(entry["label"]),
                utl=bool(entry.get("utl", False)))


def load_default_molds() -> list[Mold]:
    """Molds shipped with the package (the reproduction set)."""
    text = resources.files("dpndd.data").joinpath("molds.json").read_text(encoding="utf-8")
    return [_mold_from_dict(e) for e in json.loads(text)]


def to_mold_score(mold: EncodedMold, sentence: SentenceEncoding, s: int, t: int,
                  provider: DistributionProvider,
                  projection: PosProjection | None = None) -> float:
    """Divergence caused in the mold sentence by substituting in V[s..t]."""
    sub = Substitution(
        original=mold.encoding.ids, start=mold.span[0], end=mold.span[1],
        replacement=sentence.ids_for_words(s, t))
    return ndd(sub, provider, projection, exclude=mold.encoding.excluded)


def from_mold_score(mold: EncodedMold, sentence: SentenceEncoding, s: int, t: int,
                    provider: DistributionProvider,
                    projection: PosProjection | None = None) -> float:
    """Divergence caused in the sentence by substituting the mold span into V[s..t]."""
    lo, hi = sentence.span_for_words(s, t)
    sub = Substitution(
        original=sentence.ids, start=lo, end=hi, replacement=mold.span_ids)
    return ndd(sub, provider, projection, exclude=sentence.excluded)


def dp_ndd(label: str, sentence: SentenceEncoding, s: int, t: int,
           registry: MoldRegistry, provider: DistributionProvider,
           projection: PosProjection | None = None, *, utl_only: bool = False) -> float:
    """Minimum over the label's molds of to-mold + from-mold divergence.

    A span covering the whole sentence has no surrounding context, so only
    the to-mold side is scored for it (relevant when labeling given trees
    whose root constituent is the full sentence).
    """
    lo, hi = sentence.span_for_words(s, t)
    spans_everything = sentence.covers_all_content(lo, hi)
    best = None
    for mold in registry.molds_for(label, utl_only=utl_only):
        score = to_mold_score(mold, sentence, s, t, provider, projection)
        if not spans_everything:
            score += from_mold_score(mold, sentence, s, t, provider, projection)
        if best is None or score < best:
            best = score
    return best
