"""Shared fixtures and independent oracle implementations.

The oracles here deliberately avoid the library's fast paths: plain
Python loops over entries, so the packed/vectorised kernels are checked
against something an undergraduate could audit.
"""

import itertools
import sys

import pytest

from rrdigraph.couplings import RowOrder
from rrdigraph.matrices import BiregularBitMatrix
from rrdigraph.samplers import SamplerSpec, enumerate_all, sample_many


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "ACCEPTANCE_LINES", None) if acceptance else None
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def class_4_2():
    """All 90 matrices with n = 4, d = 2 (frozen count checked elsewhere)."""
    return list(enumerate_all(4, 4, 2, 2))


@pytest.fixture(scope="session")
def pool_8_3():
    spec = SamplerSpec(kind="switch_mcmc", n=8, d=3, steps=600, seed=101)
    return sample_many(spec, 60)


@pytest.fixture(scope="session")
def pool_bipartite():
    spec = SamplerSpec(kind="rejection", n=9, d=3, m=6, dp=2, seed=77)
    return sample_many(spec, 40)


def naive_edge_count(matrix, rows, cols):
    """Double loop over (i, j), straight off the definition."""
    return sum(matrix.entry(i, j) for i in rows for j in cols)


def naive_codegree(matrix, i1, i2):
    return sum(
        1 for j in range(matrix.n) if matrix.entry(i1, j) == 1 and matrix.entry(i2, j) == 1
    )


def naive_column_classes(matrix, i1, i2):
    """Column census of the (i1, i2) row pair: (one_one, one_zero, zero_one, zero_zero)."""
    counts = {"11": 0, "10": 0, "01": 0, "00": 0}
    for j in range(matrix.n):
        key = f"{matrix.entry(i1, j)}{matrix.entry(i2, j)}"
        counts[key] += 1
    return counts


def naive_walk(matrix, j1, j2, order=None):
    """Walk positions w(1..m) built entry by entry."""
    order = order or RowOrder(0, 1)
    positions = []
    pos = 0
    for i in order.sequence(matrix.m):
        pos += matrix.entry(i, j1) - matrix.entry(i, j2)
        positions.append(pos)
    return positions


def naive_reflecting(matrix, j1, j2, order=None):
    w = naive_walk(matrix, j1, j2, order)
    m = len(w)
    return m >= 3 and w[0] == 1 and w[1] != 1 and any(w[i] == 1 for i in range(2, m))


def naive_minor_scan(matrix, i1, i2, order=None):
    """(nK, nI, nI_reflecting) by classifying every ordered column pair."""
    order = order or RowOrder(i1, i2)
    n_k = n_i = n_i_reflecting = 0
    for j1 in range(matrix.n):
        for j2 in range(matrix.n):
            minor = (
                matrix.entry(i1, j1),
                matrix.entry(i1, j2),
                matrix.entry(i2, j1),
                matrix.entry(i2, j2),
            )
            if minor == (1, 0, 1, 0):
                n_k += 1
            elif minor == (1, 0, 0, 1):
                n_i += 1
                if naive_reflecting(matrix, j1, j2, order):
                    n_i_reflecting += 1
    return n_k, n_i, n_i_reflecting


def brute_force_class_4_2():
    """|{4x4 0/1 matrices, all line sums 2}| without the library enumerator."""
    masks = [sum(1 << j for j in combo) for combo in itertools.combinations(range(4), 2)]
    found = []
    for rows in itertools.product(masks, repeat=4):
        col_sums = [sum((r >> j) & 1 for r in rows) for j in range(4)]
        if all(s == 2 for s in col_sums):
            found.append(rows)
    return found


def all_set_pairs(m, n, nonempty=True):
    row_sets = [
        combo for size in range(0 if not nonempty else 1, m + 1)
        for combo in itertools.combinations(range(m), size)
    ]
    col_sets = [
        combo for size in range(0 if not nonempty else 1, n + 1)
        for combo in itertools.combinations(range(n), size)
    ]
    return [(a, b) for a in row_sets for b in col_sets]


def matrix_from_strings(rows):
    return BiregularBitMatrix.from_supports(
        [[j for j, ch in enumerate(r) if ch == "1"] for r in rows], len(rows[0])
    )
