"""EM mixture fitting and the Gaussian-geometry oracles."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from clipxpert.errors import (
    DegenerateInput,
    FailedToSeparate,
    IdenticalDistributions,
    InvalidStep,
    TooFewValues,
)
from clipxpert.gmm1d import (
    classification_error,
    fit_gmm2,
    gaussian_intersection,
    intersection_sensitivity,
)


def bimodal_sample(rng, n, mu1=0.0, s1=1.0, mu2=5.0, s2=1.0, w=0.5):
    n1 = int(round(w * n))
    return np.concatenate([rng.normal(mu1, s1, n1), rng.normal(mu2, s2, n - n1)])


class TestFitGmm2:
    def test_parameter_recovery(self):
        rng = np.random.default_rng(42)
        values = bimodal_sample(rng, 5000)
        fit = fit_gmm2(values)
        assert abs(fit.means[0] - 0.0) < 0.1
        assert abs(fit.means[1] - 5.0) < 0.1
        assert abs(fit.sigmas[0] - 1.0) < 0.1
        assert abs(fit.sigmas[1] - 1.0) < 0.1
        assert abs(fit.weights[0] - 0.5) < 0.1
        assert fit.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_all_equal_is_degenerate(self):
        with pytest.raises(DegenerateInput):
            fit_gmm2([1.0, 1.0, 1.0, 1.0])

    def test_too_few_values(self):
        with pytest.raises(TooFewValues):
            fit_gmm2([1.0, 2.0, 3.0])

    def test_loglik_monotone(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(10, 400))
            kind = rng.integers(3)
            if kind == 0:
                values = rng.standard_normal(n)
            elif kind == 1:
                values = rng.exponential(1.0, n)
            else:
                values = bimodal_sample(rng, n, mu2=rng.uniform(1, 8))
            try:
                fit = fit_gmm2(values)
            except FailedToSeparate:
                continue
            gains = np.diff(fit.loglik_trace)
            assert np.all(gains >= -1e-10)

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        values = bimodal_sample(rng, 500)
        a = fit_gmm2(values)
        b = fit_gmm2(values)
        np.testing.assert_array_equal(a.means, b.means)
        np.testing.assert_array_equal(a.sigmas, b.sigmas)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.n_iter == b.n_iter

    def test_components_sorted(self):
        rng = np.random.default_rng(9)
        values = bimodal_sample(rng, 600, mu1=4.0, mu2=-1.0)
        fit = fit_gmm2(values)
        assert fit.means[0] <= fit.means[1]

    def test_identical_init_means_fail_to_separate(self):
        # 25th and 75th percentiles coincide, so EM cannot break symmetry
        with pytest.raises(FailedToSeparate):
            fit_gmm2([1.0, 1.0, 1.0, 1.0, 2.0])

    def test_shift_and_scale_equivariance(self):
        rng = np.random.default_rng(10)
        values = bimodal_sample(rng, 800, mu2=4.0)
        base = fit_gmm2(values)
        shifted = fit_gmm2(values + 3.5)
        np.testing.assert_allclose(shifted.means, base.means + 3.5, atol=1e-6)
        np.testing.assert_allclose(shifted.sigmas, base.sigmas, atol=1e-6)
        np.testing.assert_allclose(shifted.weights, base.weights, atol=1e-6)
        scaled = fit_gmm2(values * 2.0)
        np.testing.assert_allclose(scaled.means, base.means * 2.0, atol=1e-6)
        np.testing.assert_allclose(scaled.sigmas, base.sigmas * 2.0, atol=1e-6)
        np.testing.assert_allclose(scaled.weights, base.weights, atol=1e-6)


class TestGaussianIntersection:
    def test_equal_sigmas_midpoint(self):
        result = gaussian_intersection(0.0, 1.0, 2.0, 1.0)
        assert result.x == pytest.approx(1.0, abs=1e-12)
        assert result.between_means

    def test_unequal_sigmas_against_quadratic_oracle(self):
        mu1, s1, mu2, s2 = 0.0, 1.0, 3.0, 2.0
        result = gaussian_intersection(mu1, s1, mu2, s2)
        assert 0.0 < result.x < 3.0 and result.between_means
        # independent oracle: numpy polynomial roots of the log-density gap
        a = 1 / s1**2 - 1 / s2**2
        b = -2 * (mu1 / s1**2 - mu2 / s2**2)
        c = mu1**2 / s1**2 - mu2**2 / s2**2 - 2 * math.log(s2 / s1)
        roots = np.roots([a, b, c])
        assert min(abs(result.x - r) for r in roots) < 1e-9
        # densities agree at the returned point
        f1 = norm.pdf(result.x, mu1, s1)
        f2 = norm.pdf(result.x, mu2, s2)
        assert abs(f1 - f2) < 1e-9 * max(f1, f2)

    def test_equal_means_symmetric_roots(self):
        result = gaussian_intersection(0.0, 1.0, 0.0, 2.0)
        expected = math.sqrt(8.0 * math.log(2.0) / 3.0)
        assert abs(result.x) == pytest.approx(expected, abs=1e-12)
        assert not result.between_means

    def test_identical_distributions_rejected(self):
        with pytest.raises(IdenticalDistributions):
            gaussian_intersection(1.0, 2.0, 1.0, 2.0)

    def test_density_equality_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            mu1, mu2 = sorted(rng.uniform(-5, 5, 2))
            s1, s2 = rng.uniform(0.1, 3.0, 2)
            if mu1 == mu2 and s1 == s2:
                continue
            result = gaussian_intersection(mu1, s1, mu2, s2)
            f1 = norm.pdf(result.x, mu1, s1)
            f2 = norm.pdf(result.x, mu2, s2)
            assert abs(f1 - f2) <= 1e-9 * max(f1, f2, 1e-300)


class TestClassificationError:
    def test_limit_far_left(self):
        t = 0.0 - 20.0 * 1.0
        assert classification_error(t, 0.0, 1.0, 2.0, 1.0) == pytest.approx(1.0,
                                                                            abs=1e-12)

    def test_symmetric_spot_value(self):
        expected = 2.0 * norm.cdf(-1.0)
        assert classification_error(1.0, 0.0, 1.0, 2.0, 1.0) == pytest.approx(
            expected, abs=1e-12)

    def test_intersection_minimizes_error_on_grid(self):
        mu1, s1, mu2, s2 = 0.0, 1.0, 3.0, 2.0
        x_star = gaussian_intersection(mu1, s1, mu2, s2).x
        at_star = classification_error(x_star, mu1, s1, mu2, s2)
        grid = np.linspace(mu1 - 4 * s1, mu2 + 4 * s2, 1001)
        errors = [classification_error(float(t), mu1, s1, mu2, s2) for t in grid]
        assert at_star <= min(errors) + 1e-12


class TestIntersectionSensitivity:
    def test_matches_asymptotic_formula(self):
        mu1, s1, mu2, s2 = 0.0, 0.05, 5.0, 1.0
        x_star = gaussian_intersection(mu1, s1, mu2, s2).x
        numeric = intersection_sensitivity(mu1, s1, mu2, s2, h=1e-4)
        asymptotic = (x_star - mu1) / s1
        assert numeric == pytest.approx(asymptotic, rel=0.1)

    def test_symmetric_setup_finite_and_midpoint_stable(self):
        value = intersection_sensitivity(0.0, 1.0, 4.0, 1.0, h=1e-5)
        assert np.isfinite(value)
        for s in (0.5, 1.0, 2.0):
            assert gaussian_intersection(0.0, s, 4.0, s).x == pytest.approx(2.0)

    def test_zero_step_rejected(self):
        with pytest.raises(InvalidStep):
            intersection_sensitivity(0.0, 1.0, 5.0, 1.0, h=0.0)

    def test_oversized_step_rejected(self):
        with pytest.raises(InvalidStep):
            intersection_sensitivity(0.0, 0.05, 5.0, 1.0, h=0.1)
