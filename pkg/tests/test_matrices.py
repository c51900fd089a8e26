import math
from fractions import Fraction

import numpy as np
import pytest

from rrdigraph.matrices import (
    BiregularBitMatrix,
    InvalidMatrixError,
    VertexSetPair,
    codegree,
    complement,
    discrepancy,
    edge_count,
    format_matrix,
    parse_matrices,
    parse_matrix,
)
from conftest import (
    all_set_pairs,
    matrix_from_strings,
    naive_codegree,
    naive_column_classes,
    naive_edge_count,
)

PARALLEL_ROWS = matrix_from_strings(["1100", "1100", "0011", "0011"])
DISJOINT_ROWS = matrix_from_strings(["1100", "0011", "1010", "0101"])


class TestCodegree:
    def test_identical_rows_give_co_d(self):
        rec = codegree(PARALLEL_ROWS, 0, 1, "out")
        assert rec.co == 2 and rec.ex == 0

    def test_disjoint_supports_give_co_zero(self):
        rec = codegree(DISJOINT_ROWS, 0, 1, "out")
        assert rec.co == 0 and rec.ex == 2

    def test_in_direction_matches_transpose(self, pool_8_3):
        for mat in pool_8_3[:10]:
            t = mat.transpose()
            for j1, j2 in ((0, 1), (2, 5)):
                assert codegree(mat, j1, j2, "in").co == codegree(t, j1, j2, "out").co

    def test_errors(self):
        with pytest.raises(ValueError):
            codegree(PARALLEL_ROWS, 1, 1)
        with pytest.raises(IndexError):
            codegree(PARALLEL_ROWS, 0, 9)
        with pytest.raises(ValueError):
            codegree(PARALLEL_ROWS, 0, 1, "sideways")

    def test_column_census_identities_exhaustive(self, class_4_2):
        # ex = d - co, zero-zero count = n - 2d + co, and the census adds
        # up to n, on every matrix of the enumerated class.
        for mat in class_4_2:
            for i1 in range(4):
                for i2 in range(4):
                    if i1 == i2:
                        continue
                    census = naive_column_classes(mat, i1, i2)
                    rec = codegree(mat, i1, i2)
                    assert rec.co == census["11"]
                    assert rec.ex == census["10"] == census["01"] == mat.d - rec.co
                    assert rec.zero_zero(mat) == census["00"] == 4 - 2 * 2 + rec.co
                    assert rec.co + census["00"] + 2 * rec.ex == 4

    def test_ex_bounded_by_d_hat(self, pool_8_3):
        for mat in pool_8_3:
            for i1 in range(mat.m):
                for i2 in range(i1 + 1, mat.m):
                    assert codegree(mat, i1, i2).ex <= mat.d_hat


class TestEdgeCount:
    def test_full_sets(self):
        pair = VertexSetPair.of(range(4), range(4))
        assert edge_count(PARALLEL_ROWS, pair) == 2 * 4

    def test_empty_sets(self):
        assert edge_count(PARALLEL_ROWS, VertexSetPair.of([], [0, 1])) == 0
        assert edge_count(PARALLEL_ROWS, VertexSetPair.of([0], [])) == 0

    def test_block_example_and_complement_identity(self):
        pair = VertexSetPair.of([0, 1], [0, 1])
        e = edge_count(PARALLEL_ROWS, pair)
        assert e == 4 == naive_edge_count(PARALLEL_ROWS, [0, 1], [0, 1])
        comp = pair.complement(PARALLEL_ROWS)
        assert edge_count(PARALLEL_ROWS, comp) == 2 * (4 - 2 - 2) + e

    def test_regularity_identities_sampled(self, pool_8_3):
        mat = pool_8_3[0]
        n, d = mat.n, mat.d
        for rows, cols in all_set_pairs(4, 4):  # subsets of the first 4 indices
            pair = VertexSetPair.of(rows, cols)
            a, b = len(rows), len(cols)
            e = edge_count(mat, pair)
            rows_c = tuple(set(range(n)) - set(rows))
            cols_c = tuple(set(range(n)) - set(cols))
            assert edge_count(mat, VertexSetPair.of(rows_c, cols)) == d * b - e
            assert edge_count(mat, VertexSetPair.of(rows, cols_c)) == d * a - e
            assert (
                edge_count(mat, VertexSetPair.of(rows_c, cols_c))
                == d * (n - a - b) + e
            )

    def test_centered_count_matches_on_complements_exactly(self, class_4_2):
        # n*e(A,B) - d*a*b == n*e(A^c,B^c) - d*(n-a)*(n-b), exact integers.
        pairs = [p for p in all_set_pairs(4, 4)]
        for mat in class_4_2[::9]:
            for rows, cols in pairs:
                pair = VertexSetPair.of(rows, cols)
                comp = pair.complement(mat)
                lhs = 4 * edge_count(mat, pair) - 2 * len(rows) * len(cols)
                rhs = 4 * edge_count(mat, comp) - 2 * (4 - len(rows)) * (4 - len(cols))
                assert lhs == rhs


class TestDiscrepancy:
    def test_complete_digraph_has_zero_discrepancy(self):
        full = matrix_from_strings(["111", "111", "111"])
        res = discrepancy(full, VertexSetPair.of([0, 2], [1]))
        assert res.disc == 0.0 and not res.degenerate

    def test_full_row_set_has_zero_discrepancy(self, pool_8_3):
        mat = pool_8_3[0]
        res = discrepancy(mat, VertexSetPair.of(range(8), [1, 4, 6]))
        assert res.disc == 0.0

    def test_block_example(self):
        res = discrepancy(PARALLEL_ROWS, VertexSetPair.of([0, 1], [0, 1]))
        assert res.disc == 2.0  # e = 4, mu = 2
        assert res.normalized == pytest.approx(1.0)

    def test_degenerate_scale_reported(self):
        zero = matrix_from_strings(["00", "00"])
        res = discrepancy(zero, VertexSetPair.of([0], [1]))
        assert res.degenerate and math.isnan(res.normalized)

    def test_mu_hat_symmetry(self, class_4_2):
        mat = class_4_2[0]
        for rows, cols in all_set_pairs(4, 4):
            pair = VertexSetPair.of(rows, cols)
            comp = pair.complement(mat)
            assert pair.mu_hat(mat) == comp.mu_hat(mat)


class TestComplement:
    def test_zero_matrix_complements_to_ones(self):
        zero = matrix_from_strings(["000", "000", "000"])
        comp = complement(zero)
        assert comp.d == 3 and comp.rows == (7, 7, 7)

    def test_involution_and_codegree_shift(self, pool_8_3):
        for mat in pool_8_3[:20]:
            comp = complement(mat)
            comp.validate()
            assert complement(comp) == mat
            for i1, i2 in ((0, 1), (3, 7)):
                rec = codegree(mat, i1, i2)
                rec_c = codegree(comp, i1, i2)
                assert rec_c.co == mat.n - 2 * mat.d + rec.co
                assert rec_c.ex == rec.ex  # the step that proves ex <= d_hat


class TestConstruction:
    def test_row_sum_violation_names_row(self):
        with pytest.raises(InvalidMatrixError, match="row 1"):
            BiregularBitMatrix([0b011, 0b001, 0b110], 3)

    def test_column_sum_violation_names_column(self):
        # Columns sum to (2, 3, 1); column 1 is the first offender.
        with pytest.raises(InvalidMatrixError, match="column 1"):
            BiregularBitMatrix([0b011, 0b011, 0b110], 3)

    def test_edge_count_divisibility_guard(self):
        with pytest.raises(InvalidMatrixError, match="divisible"):
            BiregularBitMatrix([0b11, 0b11, 0b11], 4)

    def test_immutable(self):
        with pytest.raises(AttributeError):
            PARALLEL_ROWS.d = 3

    def test_equality_and_hash(self, class_4_2):
        assert len(set(class_4_2)) == len(class_4_2)
        again = BiregularBitMatrix(class_4_2[5].rows, 4)
        assert again == class_4_2[5] and hash(again) == hash(class_4_2[5])

    def test_dense_round_trip(self, pool_8_3):
        for mat in pool_8_3[:10]:
            assert BiregularBitMatrix.from_dense(mat.dense()) == mat

    def test_derived_quantities(self):
        mat = PARALLEL_ROWS
        assert mat.p == Fraction(1, 2)
        assert mat.d_hat == 2
        assert mat.p_hat == Fraction(1, 2)
        assert mat.theta == 1

    def test_biregular_dimensions(self, pool_bipartite):
        mat = pool_bipartite[0]
        assert (mat.m, mat.n, mat.d, mat.dp) == (6, 9, 3, 2)
        assert mat.theta == Fraction(6, 9)
        assert mat.m * mat.d == mat.n * mat.dp


class TestTextFormat:
    def test_round_trip_bit_exact(self, class_4_2, pool_bipartite):
        for mat in list(class_4_2[:10]) + list(pool_bipartite[:5]):
            assert parse_matrix(format_matrix(mat)) == mat

    def test_header_and_shape(self):
        text = format_matrix(PARALLEL_ROWS)
        lines = text.split("\n")
        assert lines[0] == "4 4 2 2"
        assert text.endswith("\n")

    def test_trailing_newline_required(self):
        text = format_matrix(PARALLEL_ROWS).rstrip("\n")
        with pytest.raises(InvalidMatrixError, match="newline"):
            parse_matrix(text)

    def test_rejects_row_sum_violation_with_index(self):
        bad = "2 2 1 1\n11\n00\n"
        with pytest.raises(InvalidMatrixError, match="row 0"):
            parse_matrix(bad)

    def test_rejects_column_sum_violation_with_index(self):
        bad = "2 2 1 1\n10\n10\n"
        with pytest.raises(InvalidMatrixError, match="column 0"):
            parse_matrix(bad)

    def test_rejects_malformed_header(self):
        with pytest.raises(InvalidMatrixError, match="header"):
            parse_matrix("2 2 1\n10\n01\n")

    def test_multiple_matrices_blank_line_separated(self, class_4_2):
        blob = format_matrix(class_4_2[0]) + "\n" + format_matrix(class_4_2[1])
        mats = parse_matrices(blob)
        assert mats == [class_4_2[0], class_4_2[1]]


class TestAgainstNaiveOracles:
    def test_codegree_matches_naive(self, pool_8_3):
        for mat in pool_8_3[:15]:
            for i1 in range(0, 8, 3):
                for i2 in range(1, 8, 2):
                    if i1 == i2:
                        continue
                    assert codegree(mat, i1, i2).co == naive_codegree(mat, i1, i2)

    def test_edge_count_matches_naive(self, pool_8_3):
        rng = np.random.default_rng(0)
        for mat in pool_8_3[:15]:
            rows = [int(x) for x in rng.choice(8, 3, replace=False)]
            cols = [int(x) for x in rng.choice(8, 4, replace=False)]
            assert edge_count(mat, VertexSetPair.of(rows, cols)) == naive_edge_count(
                mat, rows, cols
            )
