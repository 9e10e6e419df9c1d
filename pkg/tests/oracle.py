"""Independent brute-force reference for the divergence metric.

Everything here is deliberately written with plain Python loops and its own
index arithmetic so it shares no code path with the package implementation.
"""

import math

from dpndd.provider import MaskQuery

EPS = 1e-10


def oracle_kl(p, q, eps=EPS):
    p = [max(float(x), eps) for x in p]
    q = [max(float(x), eps) for x in q]
    sp = sum(p)
    sq = sum(q)
    p = [x / sp for x in p]
    q = [x / sq for x in q]
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q))


def oracle_project(d, membership_rows):
    q = [sum(m * x for m, x in zip(row, d)) for row in membership_rows]
    s = sum(q)
    return [x / s for x in q]


def oracle_ndd(original, start, end, replacement, provider, projection=None, exclude=()):
    """Recompute every masked query, projection, KL term, and the mean."""
    original = list(original)
    replacement = list(replacement)
    n = len(original)
    m = len(replacement)
    edited = original[:start - 1] + replacement + original[end:]
    pairs = []
    for k in range(1, start):
        pairs.append((k, k))
    for k in range(end + 1, n + 1):
        pairs.append((k, k - (end - start + 1) + m))
    excluded = set(exclude)
    pairs = [(a, b) for a, b in pairs if a not in excluded]
    rows = projection.membership.tolist() if projection is not None else None
    values = []
    for a, b in pairs:
        d_orig = list(provider.get_distribution(MaskQuery(tuple(original), a - 1)))
        d_edit = list(provider.get_distribution(MaskQuery(tuple(edited), b - 1)))
        if rows is not None:
            d_orig = oracle_project(d_orig, rows)
            d_edit = oracle_project(d_edit, rows)
        values.append(oracle_kl(d_edit, d_orig))
    return sum(values) / len(values)
