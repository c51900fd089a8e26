"""Core 0/1 matrix types with fixed row and column sums.

A d-regular digraph on n vertices is identified with its n x n adjacency
matrix (self-loops allowed): every row and every column sums to d.  The
bipartite generalisation is an m x n matrix with row sums d and column
sums dp, so m*d = n*dp.

Rows are stored packed as Python integers (bit j = column j), which makes
the hot kernels -- codegrees and masked edge counts -- single popcounts of
word-wide ANDs.  Matrices are immutable after construction and safe to
share across threads; every operation in this module is a pure function.

All identity checks are exact: they compare integers (scaled through by n
or n^2 where a density appears), never floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "BiregularBitMatrix",
    "VertexSetPair",
    "CodegreeRecord",
    "InvalidMatrixError",
    "DiscrepancyResult",
    "codegree",
    "edge_count",
    "discrepancy",
    "complement",
    "parse_matrix",
    "parse_matrices",
    "format_matrix",
    "format_matrices",
]


class InvalidMatrixError(ValueError):
    """Raised when entries violate the fixed row/column sum constraints."""


def _pack_bits(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _unpack_bits(value: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n]


class BiregularBitMatrix:
    """Immutable m x n 0/1 matrix with row sums d and column sums dp.

    The square case m == n, d == dp is the adjacency matrix of a d-regular
    digraph.  Degenerate d in {0, n} is allowed (the class then contains a
    single matrix).
    """

    __slots__ = ("m", "n", "d", "dp", "rows", "_dense", "_hash")

    def __init__(self, rows: Sequence[int], n: int, *, _trusted: bool = False):
        rows = tuple(int(r) for r in rows)
        m = len(rows)
        if m == 0 or n <= 0:
            raise InvalidMatrixError("matrix must have at least one row and one column")
        d = rows[0].bit_count()
        # Column sums are forced by m*d = n*dp when the matrix is valid.
        if (m * d) % n != 0:
            raise InvalidMatrixError(
                f"no column-regular completion: m*d = {m * d} not divisible by n = {n}"
            )
        fields = {
            "m": m,
            "n": n,
            "d": d,
            "dp": (m * d) // n,
            "_dense": None,
            "_hash": None,
            "rows": rows,  # set last: its presence marks construction complete
        }
        for name, value in fields.items():
            object.__setattr__(self, name, value)
        if not _trusted:
            self.validate()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dense(cls, arr: np.ndarray) -> "BiregularBitMatrix":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise InvalidMatrixError("dense input must be 2-dimensional")
        if not np.isin(arr, (0, 1)).all():
            raise InvalidMatrixError("dense input must be 0/1 valued")
        arr = arr.astype(np.uint8)
        rows = [_pack_bits(arr[i]) for i in range(arr.shape[0])]
        return cls(rows, arr.shape[1])

    @classmethod
    def from_supports(cls, supports: Iterable[Iterable[int]], n: int) -> "BiregularBitMatrix":
        """Build from per-row column-index sets."""
        rows = []
        for cols in supports:
            r = 0
            for j in cols:
                if not 0 <= j < n:
                    raise InvalidMatrixError(f"column index {j} out of range [0, {n})")
                r |= 1 << j
            rows.append(r)
        return cls(rows, n)

    def validate(self) -> None:
        """Check membership in the biregular class; raise InvalidMatrixError."""
        mask = (1 << self.n) - 1
        for i, r in enumerate(self.rows):
            if r < 0 or r & ~mask:
                raise InvalidMatrixError(f"row {i} has bits outside the {self.n} columns")
            if r.bit_count() != self.d:
                raise InvalidMatrixError(
                    f"row {i} sums to {r.bit_count()}, expected d = {self.d}"
                )
        col_sums = self.dense().sum(axis=0)
        bad = np.flatnonzero(col_sums != self.dp)
        if bad.size:
            j = int(bad[0])
            raise InvalidMatrixError(
                f"column {j} sums to {int(col_sums[j])}, expected dp = {self.dp}"
            )

    # -- derived scalars -------------------------------------------------------

    @property
    def square(self) -> bool:
        return self.m == self.n

    @property
    def p(self) -> Fraction:
        """Edge density d/n = dp/m."""
        return Fraction(self.d, self.n)

    @property
    def theta(self) -> Fraction:
        """Aspect ratio m/n = dp/d."""
        return Fraction(self.m, self.n)

    @property
    def d_hat(self) -> int:
        """min(d, n - d): row degree of the sparser of M and its complement."""
        return min(self.d, self.n - self.d)

    @property
    def p_hat(self) -> Fraction:
        return Fraction(self.d_hat, self.n)

    # -- views ------------------------------------------------------------------

    def dense(self) -> np.ndarray:
        """Dense uint8 view (cached; treat as read-only)."""
        if self._dense is None:
            out = np.empty((self.m, self.n), dtype=np.uint8)
            for i, r in enumerate(self.rows):
                out[i] = _unpack_bits(r, self.n)
            out.setflags(write=False)
            self._dense = out
        return self._dense

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def transpose(self) -> "BiregularBitMatrix":
        cols = [0] * self.n
        for i, r in enumerate(self.rows):
            while r:
                low = r & -r
                cols[low.bit_length() - 1] |= 1 << i
                r ^= low
        return BiregularBitMatrix(cols, self.m, _trusted=True)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BiregularBitMatrix):
            return NotImplemented
        return self.n == other.n and self.rows == other.rows

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, self.rows))
        return self._hash

    def __setattr__(self, name, value):
        # Immutable once fully constructed (allow slot initialisation).
        if name in ("_dense", "_hash") or not hasattr(self, "rows"):
            object.__setattr__(self, name, value)
        else:
            raise AttributeError("BiregularBitMatrix is immutable")

    def __repr__(self) -> str:
        return f"BiregularBitMatrix(m={self.m}, n={self.n}, d={self.d}, dp={self.dp})"


@dataclass(frozen=True)
class VertexSetPair:
    """A pair (A, B): A a set of rows of M, B a set of columns.

    mu = p*|A|*|B| is the density prediction for the A->B edge count and
    mu_hat = p*min(|A||B|, (m-|A|)(n-|B|)) the complement-symmetric
    deviation scale; mu_hat(A, B) = mu_hat(A^c, B^c).
    """

    rows: frozenset
    cols: frozenset

    @classmethod
    def of(cls, rows: Iterable[int], cols: Iterable[int]) -> "VertexSetPair":
        return cls(frozenset(rows), frozenset(cols))

    @property
    def a(self) -> int:
        return len(self.rows)

    @property
    def b(self) -> int:
        return len(self.cols)

    def row_mask(self) -> int:
        return sum(1 << i for i in self.rows)

    def col_mask(self) -> int:
        return sum(1 << j for j in self.cols)

    def complement(self, matrix: BiregularBitMatrix) -> "VertexSetPair":
        return VertexSetPair(
            frozenset(range(matrix.m)) - self.rows,
            frozenset(range(matrix.n)) - self.cols,
        )

    def mu(self, matrix: BiregularBitMatrix) -> Fraction:
        return Fraction(matrix.d * self.a * self.b, matrix.n)

    def mu_hat(self, matrix: BiregularBitMatrix) -> Fraction:
        inner = min(self.a * self.b, (matrix.m - self.a) * (matrix.n - self.b))
        return Fraction(matrix.d * inner, matrix.n)

    def validate(self, matrix: BiregularBitMatrix) -> None:
        if self.rows and not all(0 <= i < matrix.m for i in self.rows):
            raise IndexError("row set not contained in [0, m)")
        if self.cols and not all(0 <= j < matrix.n for j in self.cols):
            raise IndexError("column set not contained in [0, n)")


@dataclass(frozen=True)
class CodegreeRecord:
    """Common/exclusive neighbour counts of one ordered vertex pair.

    co + ex = d and the count of columns where both rows vanish equals
    n - 2d + co; both identities are exact integers.
    """

    co: int
    ex: int
    direction: str  # "out" | "in"

    def zero_zero(self, matrix: BiregularBitMatrix) -> int:
        n = matrix.n if self.direction == "out" else matrix.m
        d = matrix.d if self.direction == "out" else matrix.dp
        return n - 2 * d + self.co


def codegree(
    matrix: BiregularBitMatrix, i1: int, i2: int, direction: str = "out"
) -> CodegreeRecord:
    """Number of common (out- or in-) neighbours of vertices i1, i2."""
    if direction not in ("out", "in"):
        raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")
    if i1 == i2:
        raise ValueError("codegree requires two distinct indices")
    if direction == "out":
        rows, limit, deg = matrix.rows, matrix.m, matrix.d
    else:
        t = matrix.transpose()
        rows, limit, deg = t.rows, t.m, t.d
    if not (0 <= i1 < limit and 0 <= i2 < limit):
        raise IndexError(f"indices ({i1}, {i2}) out of range [0, {limit})")
    co = (rows[i1] & rows[i2]).bit_count()
    return CodegreeRecord(co=co, ex=deg - co, direction=direction)


def edge_count(matrix: BiregularBitMatrix, pair: VertexSetPair) -> int:
    """|E  (A x B)|: edges from the row set A into the column set B."""
    pair.validate(matrix)
    bmask = pair.col_mask()
    return sum((matrix.rows[i] & bmask).bit_count() for i in pair.rows)


@dataclass(frozen=True)
class DiscrepancyResult:
    disc: float
    normalized: float  # disc / mu_hat; NaN when degenerate
    degenerate: bool


def discrepancy(matrix: BiregularBitMatrix, pair: VertexSetPair) -> DiscrepancyResult:
    """|e(A,B) - mu(A,B)| and its mu_hat-normalised value.

    mu_hat = 0 (empty/full sets with d in {0, n}) is reported as degenerate
    rather than dividing.
    """
    e = edge_count(matrix, pair)
    mu = pair.mu(matrix)
    mu_hat = pair.mu_hat(matrix)
    disc = abs(Fraction(e) - mu)
    if mu_hat == 0:
        return DiscrepancyResult(float(disc), float("nan"), True)
    return DiscrepancyResult(float(disc), float(disc / mu_hat), False)


def complement(matrix: BiregularBitMatrix) -> BiregularBitMatrix:
    """Entrywise 1 - M; row sums become n - d, column sums m - dp."""
    mask = (1 << matrix.n) - 1
    return BiregularBitMatrix([r ^ mask for r in matrix.rows], matrix.n, _trusted=True)


# -- bit-exact text format ------------------------------------------------------
#
# Header line "m n d dp", then m lines of n characters in {0,1}.  A trailing
# newline is required.  Multiple matrices concatenate with one blank line
# between records.


def format_matrix(matrix: BiregularBitMatrix) -> str:
    lines = [f"{matrix.m} {matrix.n} {matrix.d} {matrix.dp}"]
    dense = matrix.dense()
    for i in range(matrix.m):
        lines.append("".join("1" if v else "0" for v in dense[i]))
    return "\n".join(lines) + "\n"


def format_matrices(matrices: Iterable[BiregularBitMatrix]) -> str:
    return "\n".join(format_matrix(mat) for mat in matrices)


def parse_matrix(text: str) -> BiregularBitMatrix:
    mats = parse_matrices(text)
    if len(mats) != 1:
        raise InvalidMatrixError(f"expected exactly one matrix, found {len(mats)}")
    return mats[0]


def parse_matrices(text: str) -> list:
    if not text.endswith("\n"):
        raise InvalidMatrixError("matrix text must end with a trailing newline")
    blocks = [b for b in text.split("\n\n") if b.strip()]
    return [_parse_block(block) for block in blocks]


def _parse_block(block: str) -> BiregularBitMatrix:
    lines = block.strip("\n").split("\n")
    header = lines[0].split()
    if len(header) != 4:
        raise InvalidMatrixError(f"malformed header {lines[0]!r}: expected 'm n d dp'")
    try:
        m, n, d, dp = (int(x) for x in header)
    except ValueError as exc:
        raise InvalidMatrixError(f"non-integer header field in {lines[0]!r}") from exc
    if len(lines) - 1 != m:
        raise InvalidMatrixError(f"expected {m} rows, found {len(lines) - 1}")
    rows = []
    col_sums = [0] * n
    for i, line in enumerate(lines[1:]):
        if len(line) != n or set(line) - {"0", "1"}:
            raise InvalidMatrixError(f"row {i} is not a string of {n} characters in 0/1")
        r = 0
        for j, ch in enumerate(line):
            if ch == "1":
                r |= 1 << j
                col_sums[j] += 1
        if r.bit_count() != d:
            raise InvalidMatrixError(f"row {i} sums to {r.bit_count()}, expected d = {d}")
        rows.append(r)
    for j, s in enumerate(col_sums):
        if s != dp:
            raise InvalidMatrixError(f"column {j} sums to {s}, expected dp = {dp}")
    return BiregularBitMatrix(rows, n, _trusted=True)


def iter_vertex_subsets(count: int) -> Iterator[frozenset]:
    """All subsets of range(count) in mask order (oracle-sized inputs only)."""
    for mask in range(1 << count):
        yield frozenset(j for j in range(count) if mask >> j & 1)
