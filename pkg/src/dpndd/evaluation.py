"""Bracket F1 scoring, per-label metrics, confusion matrices, and
substitution-disturbance matrices.

Matching follows the usual bracket-scoring conventions with the contested
knobs exposed: trivial spans (single word, whole sentence) are excluded by
default, punctuation is kept by default, and unlabeled matching collapses
duplicate brackets unless told otherwise.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientSpans, SentenceCountMismatch, SpanSetMismatch
from .ndd import Substitution, ndd
from .pos import PosProjection
from .provider import DistributionProvider
from .subword import Encoder
from .treebank import PUNCTUATION_TAGS, LabeledTree, Sentence

@dataclass(frozen=True)
class EvalOptions:
    exclude_trivial: bool = True      # drop length-1 and whole-sentence spans
    strip_punctuation: bool = False   # remove punctuation words, remap indices
    collapse_duplicates: bool = True  # unlabeled matching: set vs multiset


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    predicted: int
    gold: int
    matched: int


@dataclass(frozen=True)
class F1Report:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    gold: int
    per_label: dict[str, LabelMetrics] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "precision": round(100 * self.precision, 2),
            "recall": round(100 * self.recall, 2),
            "f1": round(100 * self.f1, 2),
            "matched": self.matched, "predicted": self.predicted, "gold": self.gold,
            "per_label": {
                label: {"precision": round(100 * m.precision, 2),
                        "recall": round(100 * m.recall, 2),
                        "f1": round(100 * m.f1, 2),
                        "predicted": m.predicted, "gold": m.gold, "matched": m.matched}
                for label, m in self.per_label.items()},
        }

    def format_table(self) -> str:
        out = io.StringIO()
        out.write(f"{'':8s} {'P':>7s} {'R':>7s} {'F1':>7s} {'pred':>6s} {'gold':>6s}\n")
        out.write(f"{'all':8s} {100 * self.precision:7.2f} {100 * self.recall:7.2f} "
                  f"{100 * self.f1:7.2f} {self.predicted:6d} {self.gold:6d}\n")
        for label in sorted(self.per_label):
            m = self.per_label[label]
            out.write(f"{label:8s} {100 * m.precision:7.2f} {100 * m.recall:7.2f} "
                      f"{100 * m.f1:7.2f} {m.predicted:6d} {m.gold:6d}\n")
        return out.getvalue()


def _prf(matched: int, predicted: int, gold: int) -> tuple[float, float, float]:
    precision = matched / predicted if predicted else 0.0
    recall = matched / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _preprocess(tree: LabeledTree, options: EvalOptions) -> list[tuple[int, int, str]]:
    spans = tree.span_tuples()
    n = len(tree.sentence)
    if options.strip_punctuation and tree.sentence.pos_tags:
        keep = [i + 1 for i, tag in enumerate(tree.sentence.pos_tags)
                if tag not in PUNCTUATION_TAGS]
        new_index = {old: new for new, old in enumerate(keep, start=1)}
        remapped = []
        for s, t, label in spans:
            inside = [new_index[k] for k in range(s, t + 1) if k in new_index]
            if inside:
                remapped.append((inside[0], inside[-1], label))
        spans = remapped
        n = len(keep)
    if options.exclude_trivial:
        spans = [(s, t, label) for s, t, label in spans
                 if s != t and not (s == 1 and t == n)]
    return spans


def _check_alignment(predicted: Sequence[LabeledTree], gold: Sequence[LabeledTree]) -> None:
    if len(predicted) != len(gold):
        raise SentenceCountMismatch(
            f"{len(predicted)} predicted sentences vs {len(gold)} gold")


def unlabeled_f1(predicted: Sequence[LabeledTree], gold: Sequence[LabeledTree],
                 options: EvalOptions = EvalOptions()) -> F1Report:
    """Bracket match on (start, end) ignoring labels.

    The per-label rows report label-blind matching restricted to spans
    carrying that label on the corresponding side (the recall column is the
    per-label unlabeled recall).
    """
    _check_alignment(predicted, gold)
    matched = n_pred = n_gold = 0
    by_label: dict[str, list[int]] = {}
    for ptree, gtree in zip(predicted, gold):
        pspans = _preprocess(ptree, options)
        gspans = _preprocess(gtree, options)
        pred_bounds = Counter((s, t) for s, t, _ in pspans)
        gold_bounds = Counter((s, t) for s, t, _ in gspans)
        if options.collapse_duplicates:
            pred_bounds = Counter(set(pred_bounds))
            gold_bounds = Counter(set(gold_bounds))
        common = pred_bounds & gold_bounds
        matched += sum(common.values())
        n_pred += sum(pred_bounds.values())
        n_gold += sum(gold_bounds.values())
        labels = {label for _, _, label in pspans} | {label for _, _, label in gspans}
        for label in labels:
            row = by_label.setdefault(label, [0, 0, 0, 0])  # pmatch, pred, gmatch, gold
            p_l = {(s, t) for s, t, l in pspans if l == label}
            g_l = {(s, t) for s, t, l in gspans if l == label}
            row[0] += len(p_l & set(gold_bounds))
            row[1] += len(p_l)
            row[2] += len(g_l & set(pred_bounds))
            row[3] += len(g_l)
    precision, recall, f1 = _prf(matched, n_pred, n_gold)
    per_label = {}
    for label, (pmatch, npred, gmatch, ngold) in sorted(by_label.items()):
        lp = pmatch / npred if npred else 0.0
        lr = gmatch / ngold if ngold else 0.0
        lf = 2 * lp * lr / (lp + lr) if lp + lr else 0.0
        per_label[label] = LabelMetrics(lp, lr, lf, npred, ngold, gmatch)
    return F1Report(precision, recall, f1, matched, n_pred, n_gold, per_label)


def labeled_f1(predicted: Sequence[LabeledTree], gold: Sequence[LabeledTree],
               options: EvalOptions = EvalOptions()) -> F1Report:
    """Bracket match on (start, end, label); multi-labeled gold spans count
    once per label."""
    _check_alignment(predicted, gold)
    matched = n_pred = n_gold = 0
    by_label: dict[str, list[int]] = {}
    for ptree, gtree in zip(predicted, gold):
        pspans = Counter(_preprocess(ptree, options))
        gspans = Counter(_preprocess(gtree, options))
        common = pspans & gspans
        matched += sum(common.values())
        n_pred += sum(pspans.values())
        n_gold += sum(gspans.values())
        for label in {l for _, _, l in pspans} | {l for _, _, l in gspans}:
            p_l = Counter({k: v for k, v in pspans.items() if k[2] == label})
            g_l = Counter({k: v for k, v in gspans.items() if k[2] == label})
            row = by_label.setdefault(label, [0, 0, 0])
            row[0] += sum((p_l & g_l).values())
            row[1] += sum(p_l.values())
            row[2] += sum(g_l.values())
    precision, recall, f1 = _prf(matched, n_pred, n_gold)
    per_label = {label: LabelMetrics(*_prf(m, p, g), p, g, m)
                 for label, (m, p, g) in sorted(by_label.items())}
    return F1Report(precision, recall, f1, matched, n_pred, n_gold, per_label)


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # rows = gold, columns = predicted

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("gold\\pred," + ",".join(self.labels) + "\n")
        for i, label in enumerate(self.labels):
            out.write(label + "," + ",".join(str(int(c)) for c in self.counts[i]) + "\n")
        return out.getvalue()


def confusion_matrix(predicted: Sequence[LabeledTree], gold: Sequence[LabeledTree],
                     labels: Sequence[str] | None = None) -> ConfusionMatrix:
    """Gold-by-predicted label counts over identical span sets (the UTL setting)."""
    _check_alignment(predicted, gold)
    pairs: list[tuple[str, str]] = []
    for ptree, gtree in zip(predicted, gold):
        pred_map: dict[tuple[int, int], str] = {}
        for span in ptree.spans:
            pred_map[(span.start, span.end)] = span.label
        gold_bounds = {(s.start, s.end) for s in gtree.spans}
        if set(pred_map) != gold_bounds:
            raise SpanSetMismatch("predicted and gold span sets differ")
        for span in gtree.spans:
            pairs.append((span.label, pred_map[(span.start, span.end)]))
    if labels is None:
        labels = sorted({l for pair in pairs for l in pair})
    labels = tuple(labels)
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for gold_label, pred_label in pairs:
        counts[index[gold_label], index[pred_label]] += 1
    return ConfusionMatrix(labels, counts)


SpanInstance = tuple[Sentence, int, int]  # host sentence, 1-based word span


@dataclass(frozen=True)
class DisturbanceMatrix:
    """Mean substitution disturbance for each ordered (host label, donor label) pair."""

    hosts: tuple[str, ...]
    donors: tuple[str, ...]
    means: np.ndarray
    counts: np.ndarray

    def cell(self, host: str, donor: str) -> float:
        return float(self.means[self.hosts.index(host), self.donors.index(donor)])

    def row(self, host: str) -> dict[str, float]:
        i = self.hosts.index(host)
        return {donor: float(self.means[i, j]) for j, donor in enumerate(self.donors)}

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("host\\donor," + ",".join(self.donors) + "\n")
        for i, label in enumerate(self.hosts):
            out.write(label + "," + ",".join(f"{v:.6f}" for v in self.means[i]) + "\n")
        return out.getvalue()


def collect_spans_by_label(treebank: Sequence[LabeledTree],
                           labels: Sequence[str] | None = None
                           ) -> dict[str, list[SpanInstance]]:
    """Group span instances by label, skipping whole-sentence spans (no context)."""
    pools: dict[str, list[SpanInstance]] = {}
    for tree in treebank:
        n = len(tree.sentence)
        for span in tree.spans:
            if span.start == 1 and span.end == n:
                continue
            if labels is not None and span.label not in labels:
                continue
            pools.setdefault(span.label, []).append((tree.sentence, span.start, span.end))
    if labels is not None:
        pools = {label: pools.get(label, []) for label in labels}
    return pools


def disturbance_matrix(spans_by_label: Mapping[str, Sequence[SpanInstance]],
                       provider: DistributionProvider, encoder: Encoder, *,
                       sample_size: int = 2000, metric: str = "pos-ndd",
                       projection: PosProjection | None = None,
                       seed: int = 0,
                       host_labels: Sequence[str] | None = None) -> DisturbanceMatrix:
    """Average divergence of substituting donor-label spans into host-label slots.

    Each ordered label pair is sampled independently with its own seeded
    generator, so single cells are reproducible in isolation.  When a pool
    pair offers no more than `sample_size` distinct combinations they are
    enumerated exhaustively instead of sampled.  `host_labels` restricts the
    rows (donor columns always cover every label).
    """
    if metric not in ("ndd", "pos-ndd"):
        raise ValueError(f"metric must be 'ndd' or 'pos-ndd', got {metric!r}")
    if metric == "pos-ndd" and projection is None:
        raise ValueError("pos-ndd needs a projection")
    proj = projection if metric == "pos-ndd" else None
    labels = tuple(spans_by_label)
    rows = labels if host_labels is None else tuple(host_labels)
    for label in set(labels) | set(rows):
        if len(spans_by_label.get(label, ())) < 2:
            raise InsufficientSpans(
                f"label {label!r} has {len(spans_by_label.get(label, ()))} spans, need >= 2")

    encodings: dict[int, object] = {}

    def encoded(sentence: Sentence):
        key = id(sentence)
        if key not in encodings:
            encodings[key] = encoder.encode(list(sentence.words))
        return encodings[key]

    means = np.zeros((len(rows), len(labels)))
    counts = np.zeros((len(rows), len(labels)), dtype=np.int64)
    for ia, host_label in enumerate(rows):
        hosts = spans_by_label[host_label]
        for ib, donor_label in enumerate(labels):
            donors = spans_by_label[donor_label]
            rng = np.random.default_rng([seed, labels.index(host_label), ib])
            same_pool = host_label == donor_label
            # a span never pairs with its own instance: self cells measure
            # disturbance between distinct constituents of one label
            total_pairs = len(hosts) * len(donors) - (len(hosts) if same_pool else 0)
            if total_pairs <= sample_size:
                pairs = [(h, d) for h in range(len(hosts)) for d in range(len(donors))
                         if not (same_pool and h == d)]
            else:
                hs = rng.integers(len(hosts), size=sample_size)
                ds = rng.integers(len(donors) - 1 if same_pool else len(donors),
                                  size=sample_size)
                if same_pool:
                    ds = np.where(ds >= hs, ds + 1, ds)
                pairs = list(zip(hs, ds))
            values = []
            for h, d in pairs:
                host_sentence, hs, ht = hosts[h]
                donor_sentence, ds, dt = donors[d]
                host_enc = encoded(host_sentence)
                donor_enc = encoded(donor_sentence)
                lo, hi = host_enc.span_for_words(hs, ht)
                sub = Substitution(original=host_enc.ids, start=lo, end=hi,
                                   replacement=donor_enc.ids_for_words(ds, dt))
                values.append(ndd(sub, provider, proj, exclude=host_enc.excluded))
            means[ia, ib] = float(np.mean(values))
            counts[ia, ib] = len(values)
    return DisturbanceMatrix(rows, labels, means, counts)
