"""Deterministic periodic configuration of the bufferless stages.

Every IM, CIM, and COM cycles through k disjoint permutations, one per slot,
repeating every k slots. The COM stage runs the mirror (reverse) sequence, so
the composite path from IP(i, s) lands on OM(i) in every slot while the
traversed central module advances by one per slot. No matching or scheduling
decision is ever computed online.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import GeometryError, SwitchGeometry


def im_route(s: int, t: int, geometry: SwitchGeometry) -> int:
    """CIM index r reached by input port s of any IM at slot t: r = (s + t) mod m."""
    if not 0 <= s < geometry.n:
        raise GeometryError(f"input port {s} out of range [0, {geometry.n})")
    return (s + t) % geometry.m


def cim_route(i: int, t: int, geometry: SwitchGeometry) -> int:
    """CIM output port p reached by the link from IM(i) at slot t: p = (i + t) mod k."""
    if not 0 <= i < geometry.k:
        raise GeometryError(f"IM index {i} out of range [0, {geometry.k})")
    return (i + t) % geometry.k


def com_route(p: int, t: int, geometry: SwitchGeometry) -> int:
    """OM index j served by COM input port p at slot t: j = (p - t) mod k.

    The modulus is the mathematical (always nonnegative) one; Python's %
    already behaves this way for a positive divisor.
    """
    if not 0 <= p < geometry.k:
        raise GeometryError(f"COM input port {p} out of range [0, {geometry.k})")
    return (p - t) % geometry.k


def im_cim_path(i: int, s: int, t: int, geometry: SwitchGeometry) -> tuple[int, int]:
    """Central link (r, p) reached by IP(i, s) at slot t via the IM-CIM stage."""
    return im_route(s, t, geometry), cim_route(i, t, geometry)


@dataclass(frozen=True)
class CompoundPermutation:
    """Sum of one stage's k disjoint per-slot permutations over one period.

    Entries are strictly 0/1 (disjointness) and every row and column holds
    exactly k ones.
    """

    entries: np.ndarray = field(repr=False)
    period: int

    def __post_init__(self) -> None:
        e = self.entries
        k = self.period
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"compound permutation must be square, got {e.shape}")
        if not np.isin(e, (0, 1)).all():
            raise ValueError("compound permutation entries must be 0 or 1")
        if not (e.sum(axis=0) == k).all() or not (e.sum(axis=1) == k).all():
            raise ValueError(f"every row and column must sum to the period {k}")


def compound_p1(geometry: SwitchGeometry) -> CompoundPermutation:
    """IM-CIM stage compound permutation P1 over inputs u and central links r*k + p."""
    n, k, m, N = geometry.n, geometry.k, geometry.m, geometry.N
    entries = np.zeros((N, N), dtype=np.int64)
    for t in range(k):
        for i in range(k):
            for s in range(n):
                u = i * k + s
                r = im_route(s, t, geometry)
                p = cim_route(i, t, geometry)
                entries[u, r * k + p] += 1
    return CompoundPermutation(entries=entries, period=k)


def compound_p2(geometry: SwitchGeometry) -> CompoundPermutation:
    """COM stage compound permutation P2 over COM inputs r*k + p and links j*k + r."""
    k, m, N = geometry.k, geometry.m, geometry.N
    entries = np.zeros((N, N), dtype=np.int64)
    for t in range(k):
        for r in range(m):
            for p in range(k):
                j = com_route(p, t, geometry)
                entries[r * k + p, j * k + r] += 1
    return CompoundPermutation(entries=entries, period=k)
