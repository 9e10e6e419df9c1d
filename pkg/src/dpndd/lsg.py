"""Labeled span generating: per-label candidate selection, mold scoring,
conflict removal against previously fixed labels, and threshold/tolerance
filtering.  Iterating the four steps over the label order yields a labeled
bracketing with no crossing spans.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConfigError
from .molds import MoldRegistry, dp_ndd
from .pos import PosProjection
from .provider import DistributionProvider
from .subword import Encoder, SentenceEncoding
from .treebank import LabeledTree, Sentence, Span, spans_cross

SOS = "SOS"  # sentinel POS for the position left of the sentence
EOS = "EOS"  # sentinel POS for the position right of the sentence

DEFAULT_LABEL_ORDER = ("NP", "VP", "ADJP", "ADVP", "PP", "QP", "SBAR", "S",
                       "WHNP", "WHADVP", "PRN", "PRT")

ScoreFn = Callable[[str, Sentence, int, int], float]


@dataclass(frozen=True)
class PosConstraint:
    """POS gates for a span's first/last word and its outside neighbors.

    A `None` set means no constraint at that position; `max_len` bounds the
    span length in words when set.
    """

    label: str
    start: frozenset[str] | None
    end: frozenset[str] | None
    left: frozenset[str] | None
    right: frozenset[str] | None
    max_len: int | None = None

    def __post_init__(self):
        for name in ("start", "end", "left", "right"):
            value = getattr(self, name)
            if value is not None:
                if not value:
                    raise ConfigError(f"{self.label}: empty {name} POS set")
                object.__setattr__(self, name, frozenset(value))
        if self.max_len is not None and self.max_len < 1:
            raise ConfigError(f"{self.label}: max_len must be positive")


@dataclass(frozen=True)
class LabelConfig:
    label: str
    threshold: float
    tolerance: float

    def __post_init__(self):
        if self.threshold <= 0:
            raise ConfigError(f"{self.label}: threshold must be > 0")
        if self.tolerance < 0:
            raise ConfigError(f"{self.label}: tolerance must be >= 0")


@dataclass(frozen=True)
class ScoredSpan:
    start: int
    end: int
    label: str
    score: float

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"span {self.start}..{self.end} reversed")
        if self.score < 0:
            raise ValueError("score must be >= 0")

    @property
    def bounds(self) -> tuple[int, int]:
        return (self.start, self.end)


def read_constraints(path: str | os.PathLike) -> dict[str, PosConstraint]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {label: _constraint_from_dict(label, entry) for label, entry in raw.items()}


def _constraint_from_dict(label: str, entry: Mapping) -> PosConstraint:
    def pos_set(key: str) -> frozenset[str] | None:
        value = entry.get(key)
        return None if value is None else frozenset(value)

    return PosConstraint(label=label, start=pos_set("start"), end=pos_set("end"),
                         left=pos_set("left"), right=pos_set("right"),
                         max_len=entry.get("max_len"))


def read_label_configs(path: str | os.PathLike) -> dict[str, LabelConfig]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {label: LabelConfig(label, float(e["threshold"]), float(e["tolerance"]))
            for label, e in raw.items()}


def load_default_constraints() -> dict[str, PosConstraint]:
    raw = json.loads(resources.files("dpndd.data").joinpath("constraints.json")
                     .read_text(encoding="utf-8"))
    return {label: _constraint_from_dict(label, entry) for label, entry in raw.items()}


def load_default_configs(profile: str) -> dict[str, LabelConfig]:
    if profile not in ("tight", "loose"):
        raise ConfigError(f"unknown profile {profile!r}, expected 'tight' or 'loose'")
    raw = json.loads(resources.files("dpndd.data").joinpath(f"config_{profile}.json")
                     .read_text(encoding="utf-8"))
    return {label: LabelConfig(label, float(e["threshold"]), float(e["tolerance"]))
            for label, e in raw.items()}


def select_candidates(sentence: Sentence, constraint: PosConstraint) -> list[tuple[int, int]]:
    """All spans whose boundary and neighbor POS tags pass the constraint.

    The whole-sentence span is never a candidate: substituting it would leave
    no unedited positions to compare.
    """
    tags = sentence.pos_tags
    n = len(sentence)
    if not tags:
        raise ValueError("candidate selection needs a POS-tagged sentence")

    def ok(pos_set: frozenset[str] | None, tag: str) -> bool:
        return pos_set is None or tag in pos_set

    out: list[tuple[int, int]] = []
    for s in range(1, n + 1):
        if not ok(constraint.start, tags[s - 1]):
            continue
        if not ok(constraint.left, tags[s - 2] if s > 1 else SOS):
            continue
        max_t = n if constraint.max_len is None else min(n, s + constraint.max_len - 1)
        for t in range(s, max_t + 1):
            if s == 1 and t == n:
                continue
            if not ok(constraint.end, tags[t - 1]):
                continue
            if not ok(constraint.right, tags[t] if t < n else EOS):
                continue
            out.append((s, t))
    return out


def score_candidates(candidates: Sequence[tuple[int, int]], label: str,
                     sentence: SentenceEncoding, registry: MoldRegistry,
                     provider: DistributionProvider,
                     projection: PosProjection | None = None) -> list[ScoredSpan]:
    """Attach the label's mold score to each candidate, order preserved."""
    return [ScoredSpan(s, t, label, dp_ndd(label, sentence, s, t, registry,
                                           provider, projection))
            for s, t in candidates]


def remove_conflicts(spans: Sequence[ScoredSpan],
                     accepted: Sequence[ScoredSpan]) -> list[ScoredSpan]:
    """Drop spans that cross any previously accepted span (nesting is fine)."""
    return [span for span in spans
            if not any(spans_cross(span.bounds, prior.bounds) for prior in accepted)]


def filter_spans(spans: Sequence[ScoredSpan], config: LabelConfig, *,
                 overlap_keep: str = "lower") -> list[ScoredSpan]:
    """Threshold, then resolve same-label overlaps.

    Spans scoring at or above the threshold are dropped.  Of a crossing pair
    the better span survives ("lower" score by default; "higher" follows the
    alternative reading).  Nested pairs both survive only when their scores
    differ by less than the tolerance, otherwise the lower-scored one wins.
    Processing order is deterministic: ascending score, ties by (start, end).
    """
    if overlap_keep not in ("lower", "higher"):
        raise ConfigError(f"overlap_keep must be 'lower' or 'higher', got {overlap_keep!r}")
    survivors = [s for s in spans if s.score < config.threshold]

    reverse = overlap_keep == "higher"
    ordered = sorted(survivors,
                     key=lambda s: (-s.score if reverse else s.score, s.start, s.end))
    no_crossing: list[ScoredSpan] = []
    for span in ordered:
        if not any(spans_cross(span.bounds, kept.bounds) for kept in no_crossing):
            no_crossing.append(span)

    ordered = sorted(no_crossing, key=lambda s: (s.score, s.start, s.end))
    kept: list[ScoredSpan] = []
    for span in ordered:
        nested = (other for other in kept
                  if _nested(span.bounds, other.bounds) and span.bounds != other.bounds)
        if all(abs(span.score - other.score) < config.tolerance for other in nested):
            kept.append(span)
    kept.sort(key=lambda s: (s.start, s.end, s.score))
    return kept


def _nested(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return (b[0] <= a[0] and a[1] <= b[1]) or (a[0] <= b[0] and b[1] <= a[1])


def parse_sentence(sentence: Sentence, constraints: Mapping[str, PosConstraint],
                   configs: Mapping[str, LabelConfig], label_order: Sequence[str],
                   score_fn: ScoreFn, *, overlap_keep: str = "lower") -> list[ScoredSpan]:
    """Run the four steps for each label in order, accumulating accepted spans."""
    accepted: list[ScoredSpan] = []
    for label in label_order:
        constraint = constraints.get(label)
        config = configs.get(label)
        if constraint is None or config is None:
            raise ConfigError(f"label {label!r} lacks a constraint or threshold config")
        candidates = select_candidates(sentence, constraint)
        scored = [ScoredSpan(s, t, label, score_fn(label, sentence, s, t))
                  for s, t in candidates]
        scored = remove_conflicts(scored, accepted)
        accepted.extend(filter_spans(scored, config, overlap_keep=overlap_keep))
    return accepted


class LsgParser:
    """Mold-scored parser over a fixed setup (molds, constraints, thresholds)."""

    def __init__(self, registry: MoldRegistry, provider: DistributionProvider,
                 encoder: Encoder, *, projection: PosProjection | None = None,
                 constraints: Mapping[str, PosConstraint] | None = None,
                 configs: Mapping[str, LabelConfig] | None = None,
                 label_order: Sequence[str] | None = None,
                 overlap_keep: str = "lower"):
        self.registry = registry
        self.provider = provider
        self.encoder = encoder
        self.projection = projection
        self.constraints = dict(constraints) if constraints is not None \
            else load_default_constraints()
        self.configs = dict(configs) if configs is not None else load_default_configs("tight")
        order = tuple(label_order) if label_order is not None else DEFAULT_LABEL_ORDER
        self.label_order = tuple(l for l in order if l in self.constraints
                                 and l in self.configs)
        self.overlap_keep = overlap_keep
        registry.bind(encoder)

    def parse(self, sentence: Sentence) -> LabeledTree:
        encoding = self.encoder.encode(list(sentence.words))

        def score(label: str, _sentence: Sentence, s: int, t: int) -> float:
            return dp_ndd(label, encoding, s, t, self.registry, self.provider,
                          self.projection)

        spans = parse_sentence(sentence, self.constraints, self.configs,
                               self.label_order, score, overlap_keep=self.overlap_keep)
        ordered = sorted(spans, key=lambda s: (s.start, -s.end, s.score))
        return LabeledTree(sentence, [Span(s.start, s.end, s.label) for s in ordered])

    def parse_many(self, sentences: Iterable[Sentence], *, workers: int = 1) -> list[LabeledTree]:
        sentences = list(sentences)
        if workers <= 1 or len(sentences) <= 1:
            return [self.parse(s) for s in sentences]
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.parse, sentences))
