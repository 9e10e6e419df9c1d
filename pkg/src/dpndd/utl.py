"""Unlabeled tree labeling: pick each span's label by minimal mold score,
optionally weighted by POS-conditioned label priors estimated from tagged
development data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import EmptyTreebank
from .molds import MoldRegistry, dp_ndd
from .pos import PosProjection
from .provider import DistributionProvider
from .subword import Encoder
from .treebank import LabeledTree, Sentence, Span


@dataclass(frozen=True)
class PosPrior:
    """Smoothed p(label | POS) tables for span-initial and span-final words."""

    labels: tuple[str, ...]
    start_table: Mapping[str, Mapping[str, float]]
    end_table: Mapping[str, Mapping[str, float]]
    smoothing: float

    def start_prob(self, pos: str, label: str) -> float:
        return self._prob(self.start_table, pos, label)

    def end_prob(self, pos: str, label: str) -> float:
        return self._prob(self.end_table, pos, label)

    def _prob(self, table: Mapping[str, Mapping[str, float]], pos: str, label: str) -> float:
        row = table.get(pos)
        if row is None:
            return 1.0 / len(self.labels)  # unseen POS: uniform
        return row[label]

    def weight(self, start_pos: str, end_pos: str, label: str) -> float:
        return self.start_prob(start_pos, label) * self.end_prob(end_pos, label)


def estimate_priors(treebank: Sequence[LabeledTree], labels: Sequence[str],
                    smoothing: float = 1.0) -> PosPrior:
    """Count span-boundary POS tags per label with additive smoothing.

    p(l | POS) = (count(l, POS) + k) / (count(POS) + k * |labels|), estimated
    separately for span-start and span-end positions.
    """
    if not treebank:
        raise EmptyTreebank("prior estimation needs at least one sentence")
    labels = tuple(labels)
    start_counts: dict[str, dict[str, int]] = {}
    end_counts: dict[str, dict[str, int]] = {}
    for tree in treebank:
        tags = tree.sentence.pos_tags
        for span in tree.spans:
            if span.label not in labels:
                continue
            for counts, pos in ((start_counts, tags[span.start - 1]),
                                (end_counts, tags[span.end - 1])):
                row = counts.setdefault(pos, {})
                row[span.label] = row.get(span.label, 0) + 1

    def smooth(counts: dict[str, dict[str, int]]) -> dict[str, dict[str, float]]:
        table: dict[str, dict[str, float]] = {}
        for pos, row in counts.items():
            total = sum(row.values())
            denom = total + smoothing * len(labels)
            table[pos] = {l: (row.get(l, 0) + smoothing) / denom for l in labels}
        return table

    return PosPrior(labels=labels, start_table=smooth(start_counts),
                    end_table=smooth(end_counts), smoothing=smoothing)


class UtlLabeler:
    """Assign a label to each given span by maximal (prior-weighted) e^-score."""

    def __init__(self, registry: MoldRegistry, provider: DistributionProvider,
                 encoder: Encoder, *, projection: PosProjection | None = None,
                 labels: Sequence[str] | None = None, priors: PosPrior | None = None,
                 utl_molds_only: bool = True):
        self.registry = registry
        self.provider = provider
        self.encoder = encoder
        self.projection = projection
        self.labels = tuple(labels) if labels is not None else registry.labels
        self.priors = priors
        self.utl_molds_only = utl_molds_only
        registry.bind(encoder)

    def scores(self, sentence: Sentence, s: int, t: int) -> dict[str, float]:
        encoding = self.encoder.encode(list(sentence.words))
        return {label: dp_ndd(label, encoding, s, t, self.registry, self.provider,
                              self.projection, utl_only=self.utl_molds_only)
                for label in self.labels}

    def label_span(self, sentence: Sentence, s: int, t: int) -> str:
        return choose_label(self.scores(sentence, s, t), self.labels,
                            priors=self.priors,
                            start_pos=sentence.pos_tags[s - 1] if sentence.pos_tags else None,
                            end_pos=sentence.pos_tags[t - 1] if sentence.pos_tags else None)

    def label_tree(self, tree: LabeledTree) -> LabeledTree:
        encoding = self.encoder.encode(list(tree.sentence.words))
        tags = tree.sentence.pos_tags
        relabeled: list[Span] = []
        for span in tree.spans:
            scores = {label: dp_ndd(label, encoding, span.start, span.end,
                                    self.registry, self.provider, self.projection,
                                    utl_only=self.utl_molds_only)
                      for label in self.labels}
            label = choose_label(scores, self.labels, priors=self.priors,
                                 start_pos=tags[span.start - 1] if tags else None,
                                 end_pos=tags[span.end - 1] if tags else None)
            relabeled.append(Span(span.start, span.end, label))
        return LabeledTree(tree.sentence, relabeled)

    def label_treebank(self, treebank: Iterable[LabeledTree], *,
                       workers: int = 1) -> list[LabeledTree]:
        trees = list(treebank)
        if workers <= 1 or len(trees) <= 1:
            return [self.label_tree(t) for t in trees]
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.label_tree, trees))


def choose_label(scores: Mapping[str, float], label_order: Sequence[str], *,
                 priors: PosPrior | None = None, start_pos: str | None = None,
                 end_pos: str | None = None) -> str:
    """argmax over labels of weight * e^-score, ties broken by label order.

    Compared in log space (-score + log weight) so very large scores cannot
    underflow into spurious ties.
    """
    best_label = None
    best_value = -math.inf
    for label in label_order:
        value = -scores[label]
        if priors is not None:
            if start_pos is None or end_pos is None:
                raise ValueError("POS-refined labeling needs boundary POS tags")
            value += math.log(priors.weight(start_pos, end_pos, label))
        if value > best_value:
            best_value = value
            best_label = label
    if best_label is None:
        raise ValueError("no labels to choose from")
    return best_label
