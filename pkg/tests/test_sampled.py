import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svtkit.errors import DimensionError, MatrixMarketError
from svtkit.linear_maps import SamplingOperator
from svtkit.matrix_core import LowRankMatrix
from svtkit.sampled import (
    IndexSet,
    SampledMatrix,
    apply,
    apply_adjoint,
    frobenius_norm,
    project,
    read_matrix_market,
    spectral_norm_est,
    write_matrix_market,
)

from helpers import random_sampled


class TestIndexSet:
    def test_sorted_on_construction(self):
        omega = IndexSet(3, 3, [2, 0, 1], [0, 2, 1])
        assert omega.rows.tolist() == [0, 1, 2]
        assert omega.cols.tolist() == [2, 1, 0]
        assert omega.indptr.tolist() == [0, 1, 2, 3]

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            IndexSet(3, 3, [0, 0], [1, 1])

    def test_rejects_out_of_range(self):
        with pytest.raises(IndexError):
            IndexSet(2, 2, [2], [0])

    def test_equality(self):
        a = IndexSet(3, 4, [0, 2], [1, 3])
        assert a == IndexSet(3, 4, [2, 0], [3, 1])
        assert a != IndexSet(3, 5, [0, 2], [1, 3])

    def test_full(self):
        omega = IndexSet.full(2, 3)
        assert len(omega) == 6
        assert omega.indices()[:3] == [(0, 0), (0, 1), (0, 2)]


class TestProjection:
    def test_example(self):
        omega = IndexSet(2, 2, [0, 1], [0, 1])
        np.testing.assert_array_equal(project([[1.0, 2.0], [3.0, 4.0]], omega).to_dense(),
                                      [[1.0, 0.0], [0.0, 4.0]])

    def test_empty_pattern(self):
        s = project(np.ones((3, 2)), IndexSet(3, 2, [], []))
        assert s.nnz == 0
        np.testing.assert_array_equal(s.to_dense(), np.zeros((3, 2)))

    def test_idempotent_and_self_adjoint(self, rng):
        omega = random_sampled(rng, 15, 12, 0.3).pattern
        a = rng.standard_normal((15, 12))
        b = rng.standard_normal((15, 12))
        pa = project(a, omega).to_dense()
        np.testing.assert_array_equal(project(pa, omega).to_dense(), pa)
        lhs = np.sum(pa * b)
        rhs = np.sum(a * project(b, omega).to_dense())
        assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(a) * np.linalg.norm(b)

    def test_lowrank_input_matches_dense(self, rng):
        x = LowRankMatrix.from_factors(rng.standard_normal((10, 2)), rng.standard_normal((8, 2)))
        omega = random_sampled(rng, 10, 8, 0.4).pattern
        np.testing.assert_allclose(project(x, omega).values,
                                   project(x.to_dense(), omega).values, atol=1e-13)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            project(np.ones((2, 2)), IndexSet(3, 2, [0], [0]))

    def test_sampling_operator_adjoint(self, rng):
        omega = random_sampled(rng, 9, 7, 0.3).pattern
        assert SamplingOperator(omega).adjoint_error(probes=10) <= 1e-12


class TestProducts:
    def test_apply_matches_dense(self, rng):
        s = random_sampled(rng, 30, 20, 0.1)
        x = rng.standard_normal((20, 3))
        y = rng.standard_normal(30)
        np.testing.assert_allclose(apply(s, x), s.to_dense() @ x, atol=1e-12)
        np.testing.assert_allclose(apply_adjoint(s, y), s.to_dense().T @ y, atol=1e-12)

    def test_values_shared_with_csr(self, rng):
        s = random_sampled(rng, 6, 5, 0.5)
        x = rng.standard_normal(5)
        s.csr()
        s.set_values(2.0 * s.values)
        np.testing.assert_allclose(apply(s, x), s.to_dense() @ x, atol=1e-12)

    def test_dimension_checks(self, rng):
        s = random_sampled(rng, 4, 3, 0.5)
        with pytest.raises(DimensionError):
            apply(s, np.ones(4))
        with pytest.raises(DimensionError):
            apply_adjoint(s, np.ones(3))

    def test_frobenius(self, rng):
        s = random_sampled(rng, 8, 8, 0.3)
        assert frobenius_norm(s) == pytest.approx(np.linalg.norm(s.to_dense()))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 40), st.integers(2, 40), st.floats(0.05, 0.6), st.integers(0, 10**6))
    def test_spectral_norm_estimate(self, n1, n2, density, seed):
        s = random_sampled(np.random.default_rng(seed), n1, n2, density)
        ref = np.linalg.norm(s.to_dense(), 2)
        assert spectral_norm_est(s, tol=1e-8) == pytest.approx(ref, rel=1e-6)

    def test_spectral_norm_of_zero(self):
        assert spectral_norm_est(SampledMatrix.zeros(IndexSet(3, 3, [0], [0]))) == 0.0


MM_GOOD = """%%MatrixMarket matrix coordinate real general
% a comment
3 4 3
1 1 1.5
3 4 -2
2 2 1e-3
"""


class TestMatrixMarket:
    def test_read(self, tmp_path):
        p = tmp_path / "a.mtx"
        p.write_text(MM_GOOD)
        s = read_matrix_market(p)
        assert s.shape == (3, 4)
        assert s.pattern.indices() == [(0, 0), (1, 1), (2, 3)]
        np.testing.assert_array_equal(s.values, [1.5, 1e-3, -2.0])

    def test_round_trip(self, tmp_path, rng):
        s = random_sampled(rng, 13, 9, 0.3)
        back = read_matrix_market(write_matrix_market(s, tmp_path / "s.mtx", comment="x\ny"))
        assert back.pattern == s.pattern
        np.testing.assert_array_equal(back.values, s.values)

    def test_integer_field_accepted(self, tmp_path):
        p = tmp_path / "i.mtx"
        p.write_text("%%MatrixMarket matrix coordinate integer general\n2 2 1\n1 2 7\n")
        assert read_matrix_market(p).values.tolist() == [7.0]

    @pytest.mark.parametrize("body,line,fragment", [
        ("%%MatrixMarket matrix array real general\n2 2\n", 1, "header"),
        ("%%MatrixMarket matrix coordinate real general\n2 two 1\n1 1 1\n", 2, "size"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1\n", 3, "row col value"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n", 4, "outside"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n", 3, "non-finite"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n%\n1 1 2\n", 5, "duplicate"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 1\n", 4, "more than"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n", 3, "declared 3"),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", 3, "parse"),
    ])
    def test_malformed(self, tmp_path, body, line, fragment):
        p = tmp_path / "bad.mtx"
        p.write_text(body)
        with pytest.raises(MatrixMarketError, match=fragment) as info:
            read_matrix_market(p)
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}:")

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.mtx"
        p.write_text("")
        with pytest.raises(MatrixMarketError):
            read_matrix_market(p)
