import numpy as np
import pytest

from svtkit.errors import NumericalFailure
from svtkit.partial_svd import PartialSvdParams, svd_above_threshold, top_singular_triplets
from svtkit.sampled import IndexSet, SampledMatrix

from helpers import random_sampled


def _dense_ref(s, k):
    U, sig, Vt = np.linalg.svd(s.to_dense())
    return U[:, :k], sig[:k], Vt[:k].T


def _residuals(a, lr):
    fwd = np.linalg.norm(a @ lr.V - lr.U * lr.sigma, axis=0)
    adj = np.linalg.norm(a.T @ lr.U - lr.V * lr.sigma, axis=0)
    return np.maximum(fwd, adj)


class TestTopTriplets:
    def test_single_entry(self):
        s = SampledMatrix(IndexSet(4, 3, [0], [0]), [5.0])
        lr = top_singular_triplets(s, 1)
        assert lr.rank == 1 and lr.sigma[0] == pytest.approx(5.0, rel=1e-14)
        np.testing.assert_allclose(np.abs(lr.U[:, 0]), [1, 0, 0, 0], atol=1e-14)
        np.testing.assert_allclose(np.abs(lr.V[:, 0]), [1, 0, 0], atol=1e-14)

    def test_diagonal_pattern(self):
        s = SampledMatrix(IndexSet(3, 3, [0, 1, 2], [0, 1, 2]), [1.0, 3.0, 2.0])
        lr = top_singular_triplets(s, 2)
        np.testing.assert_allclose(lr.sigma, [3.0, 2.0], rtol=1e-13)

    @pytest.mark.parametrize("shape", [(120, 80), (80, 120), (100, 100)])
    @pytest.mark.parametrize("s", [1, 4, 10])
    def test_matches_dense(self, rng, shape, s):
        a = random_sampled(rng, *shape, 0.1)
        lr = top_singular_triplets(a, s)
        _, ref, _ = _dense_ref(a, s)
        np.testing.assert_allclose(lr.sigma, ref, rtol=1e-10)
        assert np.max(_residuals(a.to_dense(), lr)) <= 1e-8 * ref[0]
        assert lr.orthonormality_error() <= 1e-10

    def test_repeated_singular_values(self):
        # identity block: every singular value is 1
        s = SampledMatrix(IndexSet(6, 6, range(6), range(6)), np.ones(6))
        lr = top_singular_triplets(s, 3)
        np.testing.assert_allclose(lr.sigma, np.ones(3), rtol=1e-12)
        assert lr.orthonormality_error() <= 1e-12

    def test_short_count_on_low_rank(self, rng):
        u = rng.standard_normal(30)
        v = rng.standard_normal(20)
        omega = IndexSet.full(30, 20)
        s = SampledMatrix(omega, np.outer(u, v).ravel())
        lr = top_singular_triplets(s, 5)
        assert lr.rank == 1
        assert lr.sigma[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-12)

    def test_zero_matrix(self):
        s = SampledMatrix.zeros(IndexSet(5, 4, [1, 2], [0, 3]))
        assert top_singular_triplets(s, 2).rank == 0

    def test_s_equal_to_dimension(self, rng):
        a = random_sampled(rng, 12, 7, 0.6)
        lr = top_singular_triplets(a, 7)
        ref = np.linalg.svd(a.to_dense(), compute_uv=False)
        k = lr.rank
        np.testing.assert_allclose(lr.sigma, ref[:k], rtol=1e-10)
        assert np.all(ref[k:] <= 1e-12 * ref[0])

    def test_budget_exhaustion_raises(self, rng):
        a = random_sampled(rng, 200, 150, 0.2)
        with pytest.raises(NumericalFailure):
            top_singular_triplets(a, 5, PartialSvdParams(max_lanczos_steps=6))

    def test_full_reorth_agrees(self, rng):
        a = random_sampled(rng, 90, 70, 0.1)
        p = top_singular_triplets(a, 5)
        f = top_singular_triplets(a, 5, PartialSvdParams(full_reorth=True))
        np.testing.assert_allclose(p.sigma, f.sigma, rtol=1e-12)

    def test_info(self, rng):
        a = random_sampled(rng, 90, 70, 0.1)
        _, info = top_singular_triplets(a, 3, return_info=True)
        assert 3 <= info.steps <= PartialSvdParams().steps_for(3)
        assert info.residuals.shape == (3,)

    def test_deterministic(self, rng):
        a = random_sampled(rng, 50, 40, 0.2)
        x = top_singular_triplets(a, 3)
        y = top_singular_triplets(a, 3)
        np.testing.assert_array_equal(x.sigma, y.sigma)


class TestParams:
    def test_default_budget(self):
        assert PartialSvdParams().steps_for(4) == 70

    def test_validation(self):
        with pytest.raises(ValueError):
            PartialSvdParams(triplet_tol=0)
        with pytest.raises(ValueError):
            PartialSvdParams(max_lanczos_steps=3).steps_for(5)


class TestAboveThreshold:
    def test_stops_after_crossing(self, rng):
        a = random_sampled(rng, 150, 100, 0.1)
        ref = np.linalg.svd(a.to_dense(), compute_uv=False)
        tau = 0.5 * (ref[7] + ref[8])
        res = svd_above_threshold(a, tau, s_start=1, ell=5)
        assert res.crossed_threshold
        assert res.s_history == (1, 6, 11)
        assert res.growth_rounds == 2
        assert int(np.sum(res.triplets.sigma > tau)) == 8

    def test_first_guess_sufficient(self, rng):
        a = random_sampled(rng, 150, 100, 0.1)
        ref = np.linalg.svd(a.to_dense(), compute_uv=False)
        res = svd_above_threshold(a, 0.5 * (ref[2] + ref[3]), s_start=4)
        assert res.s_history == (4,) and res.crossed_threshold

    def test_tau_above_norm(self, rng):
        a = random_sampled(rng, 40, 30, 0.2)
        res = svd_above_threshold(a, 1e6, s_start=1)
        assert res.crossed_threshold and res.s_history == (1,)

    def test_rank_deficient_short_count(self, rng):
        u = rng.standard_normal((25, 2))
        v = rng.standard_normal((20, 2))
        s = SampledMatrix(IndexSet.full(25, 20), (u @ v.T).ravel())
        res = svd_above_threshold(s, 1e-9, s_start=1, ell=3)
        assert res.triplets.rank == 2
        assert not res.crossed_threshold

    def test_validation(self, rng):
        a = random_sampled(rng, 10, 10, 0.3)
        with pytest.raises(ValueError):
            svd_above_threshold(a, -1.0)
        with pytest.raises(ValueError):
            svd_above_threshold(a, 1.0, ell=0)
