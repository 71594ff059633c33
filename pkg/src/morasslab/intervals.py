"""Half-open ordinal intervals [lo, hi) and unions thereof.

Interval unions are kept normalized: nonempty, sorted by lower endpoint,
pairwise disjoint and non-adjacent.  They represent subsets of a level
exactly, which is what the fullness check and the boundedness decision
procedure rely on.
"""

from __future__ import annotations

from typing import Iterable

from .ordinal import OrdinalCNF

Interval = tuple[OrdinalCNF, OrdinalCNF]


def normalize(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    items = sorted((lo, hi) for lo, hi in intervals if lo < hi)
    out: list[Interval] = []
    for lo, hi in items:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return tuple(out)


def union(a: Iterable[Interval], b: Iterable[Interval]) -> tuple[Interval, ...]:
    return normalize(list(a) + list(b))


def intersect(a: Iterable[Interval], b: Iterable[Interval]) -> tuple[Interval, ...]:
    na, nb = normalize(a), normalize(b)
    out = []
    for alo, ahi in na:
        for blo, bhi in nb:
            lo = max(alo, blo)
            hi = min(ahi, bhi)
            if lo < hi:
                out.append((lo, hi))
    return normalize(out)


def intersect_all(unions: Iterable[Iterable[Interval]]) -> tuple[Interval, ...]:
    items = list(unions)
    if not items:
        return ()
    acc = normalize(items[0])
    for nxt in items[1:]:
        acc = intersect(acc, nxt)
        if not acc:
            break
    return acc


def covers_exactly(intervals: Iterable[Interval], lo: OrdinalCNF, hi: OrdinalCNF) -> bool:
    """True iff the union equals [lo, hi)."""
    norm = normalize(intervals)
    if lo == hi:
        return norm == ()
    return norm == ((lo, hi),)


def first_point(intervals: Iterable[Interval]) -> OrdinalCNF | None:
    norm = normalize(intervals)
    return norm[0][0] if norm else None


def contains(intervals: Iterable[Interval], x: OrdinalCNF) -> bool:
    return any(lo <= x < hi for lo, hi in normalize(intervals))
