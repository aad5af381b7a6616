import math

import numpy as np
import pytest
from scipy import stats

from rlbeam.array_signal import AngleGrid, ArrayConfig, spatial_signature, synthesize_scene
from rlbeam.beamformer import omni_weights
from rlbeam.detector import (
    DetectionMap,
    NoiseModel,
    ThresholdConfig,
    chi2_2_tail,
    estimate_noise_power,
    glr_statistic,
    ml_alpha,
    noncentral_chi2_2_tail,
    scan,
    threshold_from_pfa,
)


def random_vec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


class TestGlrStatistic:
    def test_aligned_case(self):
        rng = np.random.default_rng(0)
        h = random_vec(rng, 12)
        hh = float(np.sum(np.abs(h) ** 2))
        assert glr_statistic(h, h, 1.0) == pytest.approx(2 * hh, rel=1e-12)

    def test_orthogonal_case(self):
        h = np.array([1.0, 1.0j, 0.0])
        y = np.array([1.0j, 1.0, 0.0])  # h^H y = -j + j = 0
        assert glr_statistic(y, h, 1.0) == pytest.approx(0.0, abs=1e-25)

    def test_matches_direct_arithmetic(self):
        rng = np.random.default_rng(1)
        y, h = random_vec(rng, 9), random_vec(rng, 9)
        expected = 2.0 / 2.0 * abs(np.conj(h) @ y) ** 2 / np.sum(np.abs(h) ** 2)
        assert glr_statistic(y, h, 2.0) == pytest.approx(expected, rel=1e-12)

    def test_invariant_to_signature_scaling(self):
        rng = np.random.default_rng(2)
        y, h = random_vec(rng, 7), random_vec(rng, 7)
        base = glr_statistic(y, h, 1.3)
        for scale in (2.0, -0.5, 1j * 3.7, 0.1 - 0.2j):
            assert glr_statistic(y, scale * h, 1.3) == pytest.approx(base, rel=1e-12)

    def test_zero_signature_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            glr_statistic(np.ones(4), np.zeros(4), 1.0)

    def test_h0_samples_exponential_mean_two(self):
        # with known noise power the statistic is exactly chi2 with 2 dof
        rng = np.random.default_rng(3)
        h = random_vec(rng, 8)
        n = 20_000
        y = rng.standard_normal((n, 8)) / np.sqrt(2) + 1j * rng.standard_normal((n, 8)) / np.sqrt(2)
        lam = 2.0 * np.abs(y @ h.conj()) ** 2 / np.sum(np.abs(h) ** 2)
        result = stats.kstest(lam, "expon", args=(0, 2))
        assert result.pvalue > 0.01

    def test_h1_mean_is_two_plus_noncentrality(self):
        rng = np.random.default_rng(4)
        h = random_vec(rng, 8)
        hh = float(np.sum(np.abs(h) ** 2))
        alpha = 0.6 - 0.3j
        delta = 2 * abs(alpha) ** 2 * hh / 1.0
        n = 100_000
        noise = (rng.standard_normal((n, 8)) + 1j * rng.standard_normal((n, 8))) / np.sqrt(2)
        y = alpha * h + noise
        lam = 2.0 * np.abs(y @ h.conj()) ** 2 / hh
        assert lam.mean() == pytest.approx(2 + delta, rel=0.02)


class TestThreshold:
    def test_closed_form_value(self):
        assert threshold_from_pfa(1e-5) == pytest.approx(23.025851, abs=1e-6)

    def test_exact_log_inversion(self):
        assert threshold_from_pfa(math.exp(-0.5)) == pytest.approx(1.0, rel=1e-14)

    def test_full_mass_limit(self):
        assert threshold_from_pfa(1 - 1e-12) == pytest.approx(0.0, abs=1e-9)

    def test_domain_enforced(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                threshold_from_pfa(bad)

    def test_round_trip_with_tail(self):
        rng = np.random.default_rng(5)
        for x in rng.uniform(1e-3, 60, 50):
            assert threshold_from_pfa(chi2_2_tail(x)) == pytest.approx(x, rel=1e-9)

    def test_config_invariant(self):
        cfg = ThresholdConfig.from_pfa(1e-5)
        assert cfg.lambda_bar == pytest.approx(-2 * math.log(1e-5), rel=1e-12)
        with pytest.raises(ValueError, match="inconsistent"):
            ThresholdConfig(1e-5, 20.0)
        with pytest.raises(ValueError, match="p_fa"):
            ThresholdConfig(0.0, 1.0)


class TestChi2Tails:
    def test_central_anchors(self):
        assert chi2_2_tail(0.0) == 1.0
        assert chi2_2_tail(2 * math.log(2)) == pytest.approx(0.5, rel=1e-14)
        assert chi2_2_tail(23.0259) == pytest.approx(1e-5, abs=1e-9)
        with pytest.raises(ValueError):
            chi2_2_tail(-0.1)

    def test_strictly_decreasing_in_unit_interval(self):
        xs = np.linspace(0.0, 50.0, 200)
        vals = [chi2_2_tail(x) for x in xs]
        assert all(0 < v <= 1 for v in vals)
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_noncentral_reduces_to_central(self):
        for x in (0.5, 3.0, 17.2, 40.0):
            assert noncentral_chi2_2_tail(x, 0.0) == chi2_2_tail(x)

    def test_noncentral_from_zero_is_one(self):
        for d in (0.0, 1.0, 50.0, 4000.0):
            assert noncentral_chi2_2_tail(0.0, d) == 1.0

    def test_noncentral_against_monte_carlo(self):
        # statistic 2 |mu + CN(0,1)|^2 is noncentral chi2(2) with delta = 2 mu^2
        x, delta = 23.0259, 30.0
        mu = math.sqrt(delta / 2.0)
        rng = np.random.default_rng(6)
        n = 10_000_000
        z = mu + (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        p_hat = np.mean(2 * np.abs(z) ** 2 > x)
        se = math.sqrt(p_hat * (1 - p_hat) / n)
        assert abs(noncentral_chi2_2_tail(x, delta) - p_hat) < 3 * se

    def test_noncentral_against_scipy_wide_range(self):
        cases = [
            (0.5, 0.1), (23.03, 30.0), (10.0, 10.0), (40.0, 5.0), (100.0, 80.0),
            (200.0, 260.0), (1.0e3, 1.2e3), (1.6e3, 1.5e3), (2.0e3, 2.5e3),
            (3.0e3, 2.9e3), (5.0e3, 5.0e3), (23.03, 1.0e4),
        ]
        for x, d in cases:
            assert abs(noncentral_chi2_2_tail(x, d) - stats.ncx2.sf(x, 2, d)) < 1e-8

    def test_noncentral_monotonicity(self):
        xs = np.linspace(0.01, 80, 60)
        vals = [noncentral_chi2_2_tail(x, 20.0) for x in xs]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        ds = np.linspace(0.0, 80, 60)
        vals = [noncentral_chi2_2_tail(25.0, d) for d in ds]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_noncentral_domain(self):
        with pytest.raises(ValueError):
            noncentral_chi2_2_tail(-1.0, 2.0)
        with pytest.raises(ValueError):
            noncentral_chi2_2_tail(1.0, -2.0)


class TestMlAlpha:
    def test_aligned(self):
        rng = np.random.default_rng(7)
        h = random_vec(rng, 6)
        assert ml_alpha(h, h) == pytest.approx(np.linalg.norm(h), rel=1e-12)

    def test_orthogonal(self):
        h = np.array([1.0, 1.0j])
        y = np.array([1.0j, 1.0])
        assert abs(ml_alpha(y, h)) < 1e-14

    def test_links_to_glr_statistic(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            y, h = random_vec(rng, 11), random_vec(rng, 11)
            sigma2 = float(rng.uniform(0.2, 4.0))
            a_hat = ml_alpha(y, h)
            assert 2 * abs(a_hat) ** 2 / sigma2 == pytest.approx(
                glr_statistic(y, h, sigma2), rel=1e-12
            )

    def test_zero_signature_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            ml_alpha(np.ones(3), np.zeros(3))


class TestNoiseEstimate:
    def setup_method(self):
        self.arr = ArrayConfig(4, 4)
        self.grid = AngleGrid.from_degrees(-45, 45, 22)
        self.c = omni_weights(self.arr, 4.0)

    def test_all_noise_accuracy(self):
        rng = np.random.default_rng(9)
        hits = 0
        for _ in range(100):
            y = synthesize_scene([], self.c, self.grid, 100, self.arr, 1.0, rng)
            if abs(estimate_noise_power(y) - 1.0) <= 0.05:
                hits += 1
        assert hits >= 95

    def test_scale_equivariance(self):
        rng = np.random.default_rng(10)
        y = synthesize_scene([], self.c, self.grid, 100, self.arr, 1.0, rng)
        base = estimate_noise_power(y)
        scaled = estimate_noise_power(2.0 * y)  # noise power scales by 4
        assert scaled == pytest.approx(4.0 * base, rel=1e-12)

    def test_robust_to_sparse_targets(self):
        rng = np.random.default_rng(11)
        targets = [(2, 10, -4.0), (7, 50, -4.0), (13, 20, -4.0), (19, 70, -4.0)]
        hits = 0
        for _ in range(50):
            y = synthesize_scene(targets, self.c, self.grid, 100, self.arr, 1.0, rng)
            if abs(estimate_noise_power(y) - 1.0) <= 0.05:
                hits += 1
        assert hits >= 47

    def test_requires_enough_cells(self):
        with pytest.raises(ValueError, match="10 cells"):
            estimate_noise_power(np.ones((3, 2, 4), dtype=complex))


class TestScan:
    def setup_method(self):
        self.arr = ArrayConfig(4, 4)
        self.grid = AngleGrid.from_degrees(-45, 45, 22)
        self.c = omni_weights(self.arr, 4.0)
        self.noise = NoiseModel(1.0, known=True)

    def test_empirical_false_alarm_rate(self):
        rng = np.random.default_rng(12)
        n_ranges = 300
        lam = threshold_from_pfa(1e-2)
        y = synthesize_scene([], self.c, self.grid, n_ranges, self.arr, 1.0, rng)
        dmap = scan(y, self.c, self.noise, self.grid, self.arr)
        n_cells = 22 * n_ranges
        rate = float(np.mean(dmap.values > lam))
        se = math.sqrt(1e-2 * (1 - 1e-2) / n_cells)
        assert abs(rate - 1e-2) < 3 * se

    def test_noiseless_injected_target_peaks(self):
        y = np.zeros((22, 30, 16), dtype=complex)
        l0, g0 = 5, 17
        h = spatial_signature(self.grid.angles[l0], self.c, self.arr)
        y[l0, g0] = h
        dmap = scan(y, self.c, self.noise, self.grid, self.arr)
        assert np.unravel_index(np.argmax(dmap.values), dmap.values.shape) == (l0, g0)
        # aligned cell value is 2 ||h||^2 / sigma2 exactly, which also pins
        # the element ordering of the scan's internal signatures
        expected = 2.0 * float(np.sum(np.abs(h) ** 2))
        assert dmap.values[l0, g0] == pytest.approx(expected, rel=1e-12)

    def test_study_case_dimensions(self):
        arr = ArrayConfig(16, 16)
        c = omni_weights(arr, 16.0)
        rng = np.random.default_rng(13)
        y = synthesize_scene([], c, self.grid, 100, arr, 1.0, rng)
        dmap = scan(y, c, self.noise, self.grid, arr)
        assert dmap.values.shape == (22, 100)
        assert np.all(np.isfinite(dmap.values))
        assert np.all(dmap.values >= 0)

    def test_deterministic_given_snapshots(self):
        rng = np.random.default_rng(14)
        y = synthesize_scene([(4, 9, 0.0)], self.c, self.grid, 40, self.arr, 1.0, rng)
        a = scan(y, self.c, self.noise, self.grid, self.arr)
        b = scan(y, self.c, self.noise, self.grid, self.arr)
        np.testing.assert_array_equal(a.values, b.values)

    def test_estimated_noise_path(self):
        rng = np.random.default_rng(15)
        y = synthesize_scene([], self.c, self.grid, 100, self.arr, 1.0, rng)
        known = scan(y, self.c, NoiseModel(1.0, known=True), self.grid, self.arr)
        estimated = scan(y, self.c, NoiseModel(1.0, known=False), self.grid, self.arr)
        sigma_hat = estimate_noise_power(y)
        np.testing.assert_allclose(estimated.values, known.values / sigma_hat, rtol=1e-12)

    def test_shape_mismatch_rejected(self):
        y = np.zeros((5, 4, 16), dtype=complex)
        with pytest.raises(ValueError, match="bins"):
            scan(y, self.c, self.noise, self.grid, self.arr)
        y = np.zeros((22, 4, 9), dtype=complex)
        with pytest.raises(ValueError, match="length"):
            scan(y, self.c, self.noise, self.grid, self.arr)


class TestDetectionMapType:
    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(ValueError, match="negative"):
            DetectionMap(np.array([[1.0, -0.1]]))
        with pytest.raises(ValueError, match="finite"):
            DetectionMap(np.array([[1.0, np.nan]]))
        with pytest.raises(ValueError, match="2-d"):
            DetectionMap(np.ones(5))
