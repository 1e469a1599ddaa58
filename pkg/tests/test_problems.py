import json

import numpy as np
import pytest

from svtkit.errors import DimensionError
from svtkit.matrix_core import LowRankMatrix
from svtkit.problems import (
    ProblemSpec,
    degrees_of_freedom,
    frobenius_distance,
    generate,
    noise_ratio,
    relative_error,
    sigma_for_noise_ratio,
)
from svtkit.sampled import read_matrix_market


class TestSpec:
    def test_degrees_of_freedom(self):
        assert degrees_of_freedom(1000, 1000, 10) == 19_900
        assert degrees_of_freedom(5, 3, 0) == 0
        with pytest.raises(ValueError):
            degrees_of_freedom(3, 3, 4)

    def test_from_oversampling(self):
        spec = ProblemSpec.from_oversampling(100, 80, 5, 3.0)
        assert spec.m == 3 * 5 * (100 + 80 - 5)

    def test_oversampling_capped_at_full(self):
        assert ProblemSpec.from_oversampling(10, 10, 5, 6.0).m == 100

    @pytest.mark.parametrize("kw", [dict(n1=0), dict(rank=11), dict(m=0), dict(m=101),
                                    dict(noise_sigma=-1.0)])
    def test_validation(self, kw):
        args = dict(n1=10, n2=10, rank=1, m=50) | kw
        with pytest.raises(ValueError):
            ProblemSpec(**args)

    def test_undersampling_warns(self, caplog):
        ProblemSpec(10, 10, 3, 20)
        assert "degrees of freedom" in caplog.text


class TestGenerate:
    def test_deterministic(self):
        a = generate(ProblemSpec(30, 20, 2, 200, noise_sigma=0.1, seed=5))
        b = generate(ProblemSpec(30, 20, 2, 200, noise_sigma=0.1, seed=5))
        assert a.omega == b.omega
        np.testing.assert_array_equal(a.obs.values, b.obs.values)
        np.testing.assert_array_equal(a.M_true.sigma, b.M_true.sigma)

    def test_seeds_differ(self):
        a = generate(ProblemSpec(30, 20, 2, 200, seed=1))
        b = generate(ProblemSpec(30, 20, 2, 200, seed=2))
        assert a.omega != b.omega

    def test_shapes_and_rank(self):
        p = generate(ProblemSpec(40, 25, 3, 300, seed=0))
        assert p.M_true.shape == (40, 25) and p.M_true.rank == 3
        assert len(p.omega) == 300 and len(set(p.omega.indices())) == 300

    def test_clean_matches_truth(self):
        p = generate(ProblemSpec(40, 25, 3, 300, seed=0))
        dense = p.M_true.to_dense()
        np.testing.assert_allclose(p.clean.values, dense[p.omega.rows, p.omega.cols],
                                   rtol=1e-12, atol=1e-12)
        np.testing.assert_array_equal(p.obs.values, p.clean.values)

    def test_sampling_uniform(self):
        # every entry of a 4 x 5 grid should be drawn about m/20 of the time
        counts = np.zeros(20)
        for seed in range(10_000):
            p = generate(ProblemSpec(4, 5, 1, 6, seed=seed))
            counts[p.omega.rows * 5 + p.omega.cols] += 1
        expected = 10_000 * 6 / 20
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        assert chi2 < 43.8  # 0.999 quantile of chi-square with 19 dof

    def test_noise_level(self):
        p = generate(ProblemSpec(200, 200, 2, 20_000, noise_sigma=0.5, seed=3))
        z = p.obs.values - p.clean.values
        assert np.std(z) == pytest.approx(0.5, rel=0.03)

    def test_metrics(self):
        p = generate(ProblemSpec(50, 50, 2, 980, seed=0))
        met = p.metrics()
        assert met["d_r"] == 196
        assert met["m_over_dr"] == pytest.approx(5.0)
        assert met["m_over_n1n2"] == pytest.approx(980 / 2500)
        assert met["noise_ratio"] == 0.0

    def test_noise_ratio_calibration(self):
        n, r, target = 300, 5, 0.1
        p = generate(ProblemSpec.from_oversampling(
            n, n, r, 4, noise_sigma=sigma_for_noise_ratio(n, n, r, target), seed=1))
        assert p.noise_ratio == pytest.approx(target, rel=0.05)

    def test_save(self, tmp_path):
        p = generate(ProblemSpec(20, 15, 2, 100, seed=4))
        d = p.save(tmp_path / "inst")
        obs = read_matrix_market(d / "obs.mtx")
        assert obs.pattern == p.omega
        np.testing.assert_array_equal(obs.values, p.obs.values)
        truth = LowRankMatrix.load(d / "truth")
        assert relative_error(truth, p.M_true) <= 1e-14
        spec = json.loads((d / "spec.json").read_text())
        assert spec["seed"] == 4 and spec["m"] == 100


class TestMetrics:
    def test_relative_error_matches_dense(self, rng):
        x = LowRankMatrix.from_factors(rng.standard_normal((30, 3)), rng.standard_normal((20, 3)))
        m = LowRankMatrix.from_factors(rng.standard_normal((30, 2)), rng.standard_normal((20, 2)))
        want = np.linalg.norm(x.to_dense() - m.to_dense()) / np.linalg.norm(m.to_dense())
        assert relative_error(x, m) == pytest.approx(want, rel=1e-12)

    def test_relative_error_self(self, rng):
        m = LowRankMatrix.from_factors(rng.standard_normal((30, 3)), rng.standard_normal((20, 3)))
        assert relative_error(m, m) <= 1e-14

    def test_distance_of_close_pair(self, rng):
        m = LowRankMatrix.from_factors(rng.standard_normal((30, 3)), rng.standard_normal((20, 3)))
        bump = LowRankMatrix.from_factors(1e-7 * rng.standard_normal((30, 1)),
                                          rng.standard_normal((20, 1)))
        x = LowRankMatrix.from_factors(np.hstack([m.U * m.sigma, bump.U * bump.sigma]),
                                       np.hstack([m.V, bump.V]))
        assert frobenius_distance(x, m) == pytest.approx(bump.frobenius_norm(), rel=1e-6)

    def test_relative_error_zero_estimate(self, rng):
        m = LowRankMatrix.from_factors(rng.standard_normal((5, 1)), rng.standard_normal((4, 1)))
        assert relative_error(LowRankMatrix.zeros(5, 4), m) == pytest.approx(1.0)

    def test_relative_error_errors(self, rng):
        m = LowRankMatrix.from_factors(rng.standard_normal((5, 1)), rng.standard_normal((4, 1)))
        with pytest.raises(DimensionError):
            relative_error(LowRankMatrix.zeros(4, 5), m)
        with pytest.raises(ZeroDivisionError):
            relative_error(m, LowRankMatrix.zeros(5, 4))

    def test_noise_ratio(self):
        assert noise_ratio([3.0, 0.0], [0.0, 5.0]) == pytest.approx(0.6)
        with pytest.raises(DimensionError):
            noise_ratio([1.0], [1.0, 2.0])
