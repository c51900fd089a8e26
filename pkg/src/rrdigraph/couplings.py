"""Two involutions on the biregular class: simple switching and reflection.

A simple switching exchanges the 2x2 minors I = [[1,0],[0,1]] and
J = [[0,1],[1,0]] at four chosen indices and does nothing elsewhere.

A reflection acts on an ordered pair of columns (j1, j2).  Reading the two
columns row by row defines a lattice walk: +1 on a (1,0) row, -1 on (0,1),
no move otherwise; column regularity returns the walk to 0.  The pair is
*reflecting* when the walk moves to +1 on step 1, leaves it on step 2, and
first returns to +1 at some step i* >= 3; the reflection then swaps the
two columns' entries on rows 2..i*.  Both maps are involutions and both
preserve class membership, which is what makes them usable for building
exchangeable pairs out of a uniform element.

Row order convention: the walk reads rows as (i1, i2, remaining rows
ascending).  The paper-facing case is (i1, i2) = (first, second) row; the
general order supports per-pair bad-pair counts via row exchangeability.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .matrices import BiregularBitMatrix, codegree

__all__ = [
    "SwitchSite",
    "RowOrder",
    "ColumnWalk",
    "MinorClassCounts",
    "classify_site",
    "simple_switch",
    "column_walk",
    "reflect",
    "bad_pair_count",
    "count_minor_classes",
]

# Post-hoc membership validation of involution outputs; the first-return
# argument guarantees validity, so the hot path leaves this off.
VALIDATE_OUTPUTS = False

MINOR_I = ((1, 0), (0, 1))
MINOR_J = ((0, 1), (1, 0))
MINOR_K = ((1, 0), (1, 0))


@dataclass(frozen=True)
class SwitchSite:
    """Four indices naming a 2x2 minor; minor_class is filled on classify."""

    i1: int
    i2: int
    j1: int
    j2: int
    minor_class: Optional[str] = None  # "I" | "J" | "other"

    def __post_init__(self):
        if self.i1 == self.i2 or self.j1 == self.j2:
            raise ValueError("switch site needs distinct rows and distinct columns")


def classify_site(matrix: BiregularBitMatrix, site: SwitchSite) -> SwitchSite:
    minor = (
        (matrix.entry(site.i1, site.j1), matrix.entry(site.i1, site.j2)),
        (matrix.entry(site.i2, site.j1), matrix.entry(site.i2, site.j2)),
    )
    if minor == MINOR_I:
        label = "I"
    elif minor == MINOR_J:
        label = "J"
    else:
        label = "other"
    return replace(site, minor_class=label)


def simple_switch(matrix: BiregularBitMatrix, site: SwitchSite) -> BiregularBitMatrix:
    """Exchange I <-> J at the site; identity when the minor is not switchable.

    Applying the map twice at the same site returns the input bit-exactly.
    A no-op returns the input object itself.
    """
    site = classify_site(matrix, site)
    if site.minor_class == "other":
        return matrix
    flip = (1 << site.j1) | (1 << site.j2)
    rows = list(matrix.rows)
    rows[site.i1] ^= flip
    rows[site.i2] ^= flip
    out = BiregularBitMatrix(rows, matrix.n, _trusted=True)
    if VALIDATE_OUTPUTS:
        out.validate()
    return out


@dataclass(frozen=True)
class RowOrder:
    """Reading order (i1, i2, remaining rows ascending) for column walks."""

    i1: int
    i2: int

    def __post_init__(self):
        if self.i1 == self.i2:
            raise ValueError("row order needs two distinct distinguished rows")

    def sequence(self, m: int) -> tuple:
        if not (0 <= self.i1 < m and 0 <= self.i2 < m):
            raise IndexError(f"rows ({self.i1}, {self.i2}) out of range [0, {m})")
        rest = tuple(i for i in range(m) if i != self.i1 and i != self.i2)
        return (self.i1, self.i2) + rest


_NATURAL = RowOrder(0, 1)


@dataclass(frozen=True)
class ColumnWalk:
    """Walk of an ordered column pair; positions[i] = w(i), positions[0] = 0."""

    positions: tuple
    r: int  # number of +1 steps; equals the -1 step count by regularity
    reflecting: bool
    i_star: Optional[int]  # first return time to +1 (1-based), reflecting only


def column_walk(
    matrix: BiregularBitMatrix, j1: int, j2: int, order: RowOrder = _NATURAL
) -> ColumnWalk:
    """The lattice walk of columns (j1, j2) read in row order `order`."""
    if j1 == j2:
        raise ValueError("column walk needs two distinct columns")
    if not (0 <= j1 < matrix.n and 0 <= j2 < matrix.n):
        raise IndexError(f"columns ({j1}, {j2}) out of range [0, {matrix.n})")
    seq = order.sequence(matrix.m)
    b1 = (1 << j1)
    b2 = (1 << j2)
    pos = 0
    positions = [0]
    ups = 0
    for i in seq:
        row = matrix.rows[i]
        has1 = 1 if row & b1 else 0
        has2 = 1 if row & b2 else 0
        step = has1 - has2
        ups += step == 1
        pos += step
        positions.append(pos)
    m = matrix.m
    reflecting = (
        m >= 3
        and positions[1] == 1
        and positions[2] != 1
        and any(positions[i] == 1 for i in range(3, m + 1))
    )
    i_star = None
    if reflecting:
        i_star = next(i for i in range(3, m + 1) if positions[i] == 1)
    return ColumnWalk(tuple(positions), ups, reflecting, i_star)


def reflect(
    matrix: BiregularBitMatrix, j1: int, j2: int, order: RowOrder = _NATURAL
) -> BiregularBitMatrix:
    """Swap columns (j1, j2) on rows at order positions 2..i* when reflecting.

    Non-reflecting pairs are left unchanged (the input object is returned).
    The map is an involution, and the first-return definition forces equal
    +/- step counts on the swapped range, so row and column sums survive.
    """
    walk = column_walk(matrix, j1, j2, order)
    if not walk.reflecting:
        return matrix
    seq = order.sequence(matrix.m)
    swap_mask = (1 << j1) | (1 << j2)
    rows = list(matrix.rows)
    for i in seq[1 : walk.i_star]:
        row = rows[i]
        b1 = (row >> j1) & 1
        b2 = (row >> j2) & 1
        if b1 != b2:
            rows[i] = row ^ swap_mask
    out = BiregularBitMatrix(rows, matrix.n, _trusted=True)
    if VALIDATE_OUTPUTS:
        out.validate()
    return out


def _bits(value: int) -> list:
    out = []
    while value:
        low = value & -value
        out.append(low.bit_length() - 1)
        value ^= low
    return out


def _bad_mask(
    matrix: BiregularBitMatrix, i1: int, i2: int, order: RowOrder
) -> tuple:
    """(ex1 columns, ex2 columns, bad boolean matrix) for Ex x Ex pairs.

    A pair (c1, c2) in Ex(i1,i2) x Ex(i2,i1) automatically satisfies the
    first two reflecting conditions under `order`; it is bad exactly when
    its walk never returns to +1 from step 3 on.
    """
    r1, r2 = matrix.rows[i1], matrix.rows[i2]
    ex1 = _bits(r1 & ~r2)
    ex2 = _bits(r2 & ~r1)
    if not ex1:
        return ex1, ex2, np.zeros((0, 0), dtype=bool)
    seq = list(order.sequence(matrix.m))
    dense = matrix.dense()[seq, :].astype(np.int8)
    steps = dense[:, ex1][:, :, None] - dense[:, ex2][:, None, :]
    walks = np.cumsum(steps, axis=0)
    bad = ~(walks[2:] == 1).any(axis=0)
    return ex1, ex2, bad


def bad_pair_count(
    matrix: BiregularBitMatrix, i1: int, i2: int, order: Optional[RowOrder] = None
) -> int:
    """Number of non-reflecting pairs in Ex(i1,i2) x Ex(i2,i1).

    Bounded by ex^2 <= min(d, n-d)^2; each candidate walk is O(m) with the
    scan vectorised over all candidate pairs at once.
    """
    if i1 == i2:
        raise ValueError("bad_pair_count requires two distinct rows")
    order = RowOrder(i1, i2) if order is None else order
    _, _, bad = _bad_mask(matrix, i1, i2, order)
    return int(bad.sum())


class MinorClassCounts(NamedTuple):
    nK: int  # ordered column pairs whose (i1,i2) minor is K = [[1,0],[1,0]]
    nI_reflecting: int
    nI_bad: int


def count_minor_classes(
    matrix: BiregularBitMatrix, i1: int, i2: int, order: Optional[RowOrder] = None
) -> MinorClassCounts:
    """Counts of K minors and of reflecting/bad I minors over all column pairs.

    nK = co * (n - 2d + co) and nI_reflecting + nI_bad = ex^2; the direct
    O(n^2) scan is kept to the test oracle.
    """
    if i1 == i2:
        raise ValueError("count_minor_classes requires two distinct rows")
    order = RowOrder(i1, i2) if order is None else order
    rec = codegree(matrix, i1, i2, "out")
    zero_zero = matrix.n - 2 * matrix.d + rec.co
    b = bad_pair_count(matrix, i1, i2, order)
    return MinorClassCounts(
        nK=rec.co * zero_zero,
        nI_reflecting=rec.ex * rec.ex - b,
        nI_bad=b,
    )
