"""Tests for the difference estimator, its variance and the sigma^2_loo estimate."""

from unittest import TestCase

import numpy as np

from loo_subsample.commands.verify import enumeration_moments
from loo_subsample.errors import InputValidationError, NumericalDegeneracyError
from loo_subsample.estimators.difference import diff_elpd, diff_sigma2_loo, diff_variance, diff_variance_wr
from loo_subsample.sampling.plans import plan_from_indices, srs_wor, srs_wr
from loo_subsample.surrogates.pointwise import exact_surrogate, zero_surrogate


class TestDiffElpd(TestCase):
    """Tests for diff_elpd."""

    def setUp(self):
        """Set up test environment."""
        rng = np.random.default_rng(21)
        self.exact = rng.normal(-1.0, 0.8, size=30)
        self.approx = self.exact + rng.normal(0.0, 0.1, size=30)

    def test_hand_arithmetic(self):
        """Test a zero surrogate against a hand computation."""
        plan = plan_from_indices([0, 2], 4)
        self.assertEqual(diff_elpd(zero_surrogate(4), np.array([1.0, 3.0]), plan), 8.0)

    def test_exact_surrogate_recovers_total(self):
        """Test that a perfect surrogate gives the exact total for any plan."""
        surrogate = exact_surrogate(self.exact)
        for seed in range(5):
            plan = srs_wor(30, 6, seed)
            self.assertAlmostEqual(diff_elpd(surrogate, self.exact[plan.indices], plan), np.sum(self.exact), places=12)

    def test_full_sample_recovers_total(self):
        """Test that m = n gives the exact total for any surrogate."""
        plan = srs_wor(30, 30, 2)
        estimate = diff_elpd(exact_surrogate(self.approx), self.exact[plan.indices], plan)
        self.assertAlmostEqual(estimate, np.sum(self.exact), places=11)

    def test_misaligned_lengths(self):
        """Test exact values that do not match the plan size."""
        plan = plan_from_indices([0, 1, 2], 30)
        with self.assertRaises(InputValidationError):
            diff_elpd(exact_surrogate(self.approx), self.exact[:2], plan)
        with self.assertRaises(InputValidationError):
            diff_elpd(exact_surrogate(self.approx[:10]), self.exact[:3], plan)


class TestDiffVariance(TestCase):
    """Tests for the subsampling variance formulas."""

    def setUp(self):
        """Set up test environment."""
        rng = np.random.default_rng(22)
        self.exact = rng.normal(-1.0, 0.8, size=40)
        self.residual = rng.normal(0.0, 0.2, size=40)
        self.plan = srs_wor(40, 8, 3)

    def _variance(self, scale: float) -> float:
        surrogate = exact_surrogate(self.exact - scale * self.residual)
        return diff_variance(surrogate, self.exact[self.plan.indices], self.plan)

    def test_perfect_surrogate(self):
        """Test zero variance when residuals vanish."""
        self.assertEqual(self._variance(0.0), 0.0)

    def test_full_sample(self):
        """Test the finite-population correction at m = n."""
        plan = srs_wor(40, 40, 1)
        surrogate = exact_surrogate(self.exact - self.residual)
        self.assertEqual(diff_variance(surrogate, self.exact[plan.indices], plan), 0.0)

    def test_formula(self):
        """Test n^2 (1 - m/n) s_e^2 / m."""
        e = self.residual[self.plan.indices]
        expected = 40 ** 2 * (1 - 8 / 40) * np.var(e, ddof=1) / 8
        self.assertAlmostEqual(self._variance(1.0), expected, places=10)

    def test_residual_shrink_law(self):
        """Test that scaling residuals by c scales the variance by c^2."""
        base = self._variance(1.0)
        for eps in (1.0, 0.1, 0.01):
            self.assertAlmostEqual(self._variance(eps) / (eps ** 2 * base), 1.0, places=9)

    def test_needs_two_units(self):
        """Test m < 2."""
        plan = plan_from_indices([3], 40)
        with self.assertRaises(NumericalDegeneracyError):
            diff_variance(exact_surrogate(self.exact), self.exact[[3]], plan)

    def test_with_replacement_plan(self):
        """Test that the WOR formula refuses WR plans and the WR formula applies."""
        plan = srs_wr(40, 8, 3)
        surrogate = exact_surrogate(self.exact - self.residual)
        at_sample = self.exact[plan.indices]
        with self.assertRaises(InputValidationError):
            diff_variance(surrogate, at_sample, plan)
        e = self.residual[plan.indices]
        self.assertAlmostEqual(diff_variance_wr(surrogate, at_sample, plan), 40 ** 2 * np.var(e, ddof=1) / 8, places=10)


class TestEnumeration(TestCase):
    """Design-unbiasedness checks over all subsamples."""

    def setUp(self):
        """Set up test environment."""
        rng = np.random.default_rng(23)
        self.exact = rng.normal(-1.2, 0.7, size=8)
        self.approx = self.exact + rng.normal(0.0, 0.4, size=8)

    def test_unbiased_total(self):
        """Test that the mean over all 56 subsamples equals the total."""
        moments = enumeration_moments(self.exact, self.approx, 3)
        self.assertAlmostEqual(moments.mean_elpd, moments.total, delta=1e-10)

    def test_variance_formula(self):
        """Test that the mean variance estimate equals the design variance."""
        moments = enumeration_moments(self.exact, self.approx, 3)
        self.assertAlmostEqual(moments.mean_variance_estimate, moments.estimator_variance, delta=1e-10)

    def test_unbiased_sigma2(self):
        """Test that the sigma^2 estimate is unbiased for the population variance."""
        moments = enumeration_moments(self.exact, self.approx, 3)
        self.assertAlmostEqual(moments.mean_sigma2, np.var(self.exact), delta=1e-10)

    def test_constant_values(self):
        """Test that constant LOO values have zero sigma^2 in expectation."""
        moments = enumeration_moments(np.full(8, -0.9), self.approx, 3)
        self.assertLess(abs(moments.mean_sigma2), 1e-10)


class TestSigma2Loo(TestCase):
    """Tests for diff_sigma2_loo."""

    def test_perfect_full_sample(self):
        """Test that a perfect surrogate at m = n gives the population variance."""
        exact = np.random.default_rng(24).normal(size=12)
        plan = srs_wor(12, 12, 0)
        surrogate = exact_surrogate(exact)
        elpd_hat = diff_elpd(surrogate, exact[plan.indices], plan)
        var_hat = diff_variance(surrogate, exact[plan.indices], plan)
        sigma2 = diff_sigma2_loo(surrogate, exact[plan.indices], plan, elpd_hat, var_hat)
        self.assertAlmostEqual(sigma2, np.var(exact), places=12)
