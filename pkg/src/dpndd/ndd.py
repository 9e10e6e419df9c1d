"""Neighboring-distribution divergence between a sentence and an edited form.

The edit replaces tokens i..j (1-based inclusive) of the original sequence
with a replacement sequence.  Every unedited ("overlapped") position is
masked in both sequences, the masked-LM distributions are compared with KL
divergence (edited as numerator, natural log), and the per-position values
are mean-pooled.  With a POS projection the distributions are collapsed to
POS classes first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyOverlap, InvalidRange
from .pos import PosProjection
from .provider import DistributionProvider, MaskQuery

KL_EPSILON = 1e-10  # floor applied to both distributions before the log ratio


@dataclass(frozen=True)
class Substitution:
    """Replacement of tokens start..end (1-based inclusive) with new tokens."""

    original: tuple[int, ...]
    start: int
    end: int
    replacement: tuple[int, ...]
    allow_deletion: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "original", tuple(int(t) for t in self.original))
        object.__setattr__(self, "replacement", tuple(int(t) for t in self.replacement))
        n = len(self.original)
        if not 1 <= self.start <= self.end <= n:
            raise InvalidRange(
                f"need 1 <= start <= end <= {n}, got start={self.start} end={self.end}")
        if not self.replacement and not self.allow_deletion:
            raise InvalidRange("empty replacement (deletion) is disabled")

    @property
    def span_length(self) -> int:
        return self.end - self.start + 1


def overlap_alignment(n: int, start: int, end: int, m: int) -> tuple[tuple[int, int], ...]:
    """Pair each unedited position of the original with its edited-side position.

    Positions are 1-based; before the span they map k -> k, after it
    k -> k - (end - start + 1) + m.
    """
    shift = m - (end - start + 1)
    return tuple((k, k) for k in range(1, start)) + tuple(
        (k, k + shift) for k in range(end + 1, n + 1))


def apply_substitution(sub: Substitution) -> tuple[tuple[int, ...], tuple[tuple[int, int], ...]]:
    """Return the edited token sequence and the overlap alignment."""
    edited = sub.original[:sub.start - 1] + sub.replacement + sub.original[sub.end:]
    return edited, overlap_alignment(len(sub.original), sub.start, sub.end, len(sub.replacement))


def kl_divergence(q_edited: np.ndarray, q_orig: np.ndarray, *,
                  epsilon: float = KL_EPSILON) -> float:
    """KL(edited || original) in nats, with both sides floored at `epsilon`.

    Flooring plus renormalization keeps the value finite when float32
    transport underflows an entry to zero.
    """
    p = np.asarray(q_edited, dtype=np.float64)
    q = np.asarray(q_orig, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionMismatch(f"length mismatch: {p.shape} vs {q.shape}")
    p = np.maximum(p, epsilon)
    q = np.maximum(q, epsilon)
    p = p / p.sum()
    q = q / q.sum()
    return float(np.sum(p * np.log(p / q)))


def ndd(sub: Substitution, provider: DistributionProvider,
        projection: PosProjection | None = None, *,
        exclude: Collection[int] = (), epsilon: float = KL_EPSILON) -> float:
    """Mean masked-distribution divergence over the unedited positions.

    `exclude` lists 1-based positions of the original sequence to leave out
    of the pooling (sentence delimiter tokens, when present); excluded
    positions must lie outside the edited span.  Passing a `projection`
    computes the POS-class variant.
    """
    edited, alignment = apply_substitution(sub)
    if not alignment:
        raise EmptyOverlap("substitution spans the whole sequence")
    excluded = set(exclude)
    for pos in excluded:
        if sub.start <= pos <= sub.end:
            raise InvalidRange(f"excluded position {pos} lies inside the edited span")
    pooled = [(k, k2) for k, k2 in alignment if k not in excluded]
    if not pooled:
        raise EmptyOverlap("no positions left to pool after exclusions")

    queries: list[MaskQuery] = []
    for k, k2 in pooled:
        queries.append(MaskQuery(tokens=sub.original, masked_index=k - 1))
        queries.append(MaskQuery(tokens=edited, masked_index=k2 - 1))
    vectors = provider.get_distributions_batch(queries)

    total = 0.0
    for idx in range(len(pooled)):
        d_orig = vectors[2 * idx]
        d_edit = vectors[2 * idx + 1]
        if projection is not None:
            d_orig = projection.project(d_orig)
            d_edit = projection.project(d_edit)
        total += kl_divergence(d_edit, d_orig, epsilon=epsilon)
    return total / len(pooled)


def substitution_for_spans(host_tokens: Sequence[int], start: int, end: int,
                           donor_tokens: Sequence[int], donor_start: int,
                           donor_end: int) -> Substitution:
    """Substitution replacing host span start..end with donor span donor_start..donor_end."""
    if not 1 <= donor_start <= donor_end <= len(donor_tokens):
        raise InvalidRange(
            f"donor span {donor_start}..{donor_end} out of range for {len(donor_tokens)} tokens")
    return Substitution(
        original=tuple(host_tokens), start=start, end=end,
        replacement=tuple(donor_tokens[donor_start - 1:donor_end]))
