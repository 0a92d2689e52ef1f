"""Power transform, inverse, and maximum-likelihood lambda search."""

import math

import numpy as np
import pytest

from clipxpert.boxcox import (
    BoxCoxFit,
    boxcox_transform,
    fit_lambda_mle,
    inverse_boxcox,
    positivity_shift,
    profile_loglik,
)
from clipxpert.errors import (
    DegenerateValues,
    InverseDomainError,
    NonPositiveInput,
    TooFewValues,
)


def oracle_loglik(values, lam):
    """Independent profile log-likelihood (constants dropped): the Gaussian
    term collapses to -n/2 log(sigma-hat^2), plus the Jacobian term."""
    v = np.asarray(values, dtype=np.float64)
    y = np.log(v) if lam == 0 else (v**lam - 1.0) / lam
    var = np.var(y)
    if var <= 0 or not np.isfinite(var):
        return -np.inf
    return -0.5 * v.size * np.log(var) + (lam - 1.0) * np.sum(np.log(v))


class TestTransform:
    def test_lambda_one_is_shift(self):
        assert boxcox_transform(3.0, 1.0) == pytest.approx(2.0, abs=1e-12)

    def test_lambda_zero_is_log(self):
        assert boxcox_transform(math.e, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_lambda_two(self):
        assert boxcox_transform(2.0, 2.0) == pytest.approx(1.5, abs=1e-12)

    def test_rejects_non_positive(self):
        with pytest.raises(NonPositiveInput):
            boxcox_transform([1.0, 0.0], 0.5)
        with pytest.raises(NonPositiveInput):
            boxcox_transform([-1.0], 1.0)

    def test_monotone_for_any_lambda(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            lam = rng.uniform(-3, 3)
            v = np.sort(rng.uniform(0.01, 10.0, size=20))
            out = boxcox_transform(v, lam)
            assert np.all(np.diff(out) > 0)

    def test_argsort_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            lam = rng.uniform(-2, 2)
            v = rng.uniform(0.01, 5.0, size=100)
            np.testing.assert_array_equal(np.argsort(v),
                                          np.argsort(boxcox_transform(v, lam)))

    def test_continuity_at_zero(self):
        v = np.linspace(0.1, 10, 200)
        near_zero = boxcox_transform(v, 1e-8)
        np.testing.assert_allclose(near_zero, np.log(v), atol=1e-6)


class TestInverse:
    def test_inverse_of_lambda_one(self):
        assert inverse_boxcox(2.0, 1.0) == pytest.approx(3.0, abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            v = rng.uniform(1e-6, 10.0)
            lam = rng.uniform(-2.0, 2.0)
            back = inverse_boxcox(float(boxcox_transform(v, lam)), lam)
            assert back == pytest.approx(v, abs=1e-9, rel=1e-9)

    def test_domain_error(self):
        with pytest.raises(InverseDomainError):
            inverse_boxcox(-1.0, 2.0)  # lam*value + 1 = -1


class TestLambdaFit:
    def test_too_few_values(self):
        with pytest.raises(TooFewValues):
            fit_lambda_mle([1.0, 2.0])

    def test_degenerate_values(self):
        with pytest.raises(DegenerateValues):
            fit_lambda_mle([2.0, 2.0, 2.0, 2.0])

    def test_lognormal_recovers_zero(self):
        rng = np.random.default_rng(3)
        values = np.exp(rng.standard_normal(5000))
        fit = fit_lambda_mle(values)
        assert abs(fit.lambda_star) < 0.1
        # dense-grid oracle agrees
        grid = np.arange(-1.0, 1.0, 0.002)
        oracle_best = grid[int(np.argmax([oracle_loglik(values + fit.shift, g)
                                          for g in grid]))]
        assert abs(fit.lambda_star - oracle_best) < 0.01

    def test_gaussian_recovers_one(self):
        rng = np.random.default_rng(4)
        values = rng.normal(5.0, 1.0, size=5000)
        values = values[values > 0]
        fit = fit_lambda_mle(values)
        assert abs(fit.lambda_star - 1.0) < 0.3

    def test_never_worse_than_grid(self):
        rng = np.random.default_rng(5)
        values = np.abs(rng.standard_normal(300)) + 0.1
        fit = fit_lambda_mle(values)
        shifted = values + fit.shift
        at_best = profile_loglik(shifted, fit.lambda_star)
        for lam in np.arange(-5.0, 5.0 + 0.005, 0.01):
            assert at_best >= profile_loglik(shifted, float(lam)) - 1e-9

    def test_shift_clears_zeros_and_negatives(self):
        values = np.array([-0.5, 0.0, 1.0, 2.0])
        shift = positivity_shift(values)
        assert np.all(values + shift > 0)
        fit = fit_lambda_mle(values)
        assert isinstance(fit, BoxCoxFit)
        assert fit.shift == pytest.approx(0.5 + 1e-6)
        assert fit.search_range == (-5.0, 5.0)
        assert fit.lambda_star >= -5.0 and fit.lambda_star <= 5.0
