"""Tests for importance-sampling LOO surrogates."""

from unittest import TestCase, mock

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from loo_subsample.errors import InputValidationError
from loo_subsample.models.blr import (
    NormalInverseGammaPrior,
    draw_posterior,
    exact_loo_blr,
    fit_conjugate_blr,
    loglik_matrix,
    simulate_blr,
)
from loo_subsample.surrogates.importance import (
    PARETO_K_THRESHOLD,
    gpd_fit_tail,
    importance_loo,
    pareto_smooth_log_ratios,
    psis_loo_columns,
    psis_surrogate,
    psis_tail_length,
    tis_surrogate,
)
from loo_subsample.surrogates.pointwise import waic_surrogate
from loo_subsample.surrogates.types import LogLikMatrix, SurrogateMethod


class TestParetoFit(TestCase):
    """Tests for the generalized Pareto tail fit."""

    def test_tail_length(self):
        """Test the tail length rule."""
        self.assertEqual(psis_tail_length(4000), 190)
        self.assertEqual(psis_tail_length(25), 5)
        self.assertEqual(psis_tail_length(100), 20)

    def test_degenerate_tail(self):
        """Test that an all-equal tail returns the -inf sentinel."""
        k, sigma = gpd_fit_tail(np.full(10, 0.3))
        self.assertEqual(k, float("-inf"))
        self.assertEqual(sigma, 0.0)

    def test_invalid_tails(self):
        """Test short, unsorted and negative tails."""
        with self.assertRaises(InputValidationError):
            gpd_fit_tail(np.arange(4.0))
        with self.assertRaises(InputValidationError):
            gpd_fit_tail(np.array([3.0, 1.0, 2.0, 4.0, 5.0]))
        with self.assertRaises(InputValidationError):
            gpd_fit_tail(np.array([-1.0, 1.0, 2.0, 4.0, 5.0]))

    def test_recovers_shape(self):
        """Test that k = 0.5 is recovered from GPD samples."""
        estimates = []
        for seed in range(5):
            sample = stats.genpareto.rvs(c=0.5, scale=1.0, size=1000, random_state=np.random.default_rng(seed))
            estimates.append(gpd_fit_tail(np.sort(sample))[0])
        self.assertLess(abs(np.median(estimates) - 0.5), 0.15)

    def test_recovers_exponential_and_heavy_tails(self):
        """Test recovery of k = 0 and k = 0.7 from tails of 1000 values."""
        for k in (0.0, 0.7):
            estimates = []
            for seed in range(10):
                sample = stats.genpareto.rvs(c=k, scale=1.0, size=1000, random_state=np.random.default_rng(seed))
                estimates.append(gpd_fit_tail(np.sort(sample))[0])
            with self.subTest(k=k):
                self.assertLess(abs(np.median(estimates) - k), 0.1)
                self.assertLess(np.max(np.abs(np.array(estimates) - k)), 0.2)

    def test_deterministic(self):
        """Test that the fit is a pure function of its input."""
        tail = np.sort(np.random.default_rng(1).exponential(size=50))
        self.assertEqual(gpd_fit_tail(tail), gpd_fit_tail(tail.copy()))

    def test_smoothing_caps_at_raw_maximum(self):
        """Test that smoothed ratios never exceed the largest raw ratio."""
        log_ratios = np.random.default_rng(2).standard_t(df=2, size=400)
        smoothed, k = pareto_smooth_log_ratios(log_ratios)
        self.assertLessEqual(np.max(smoothed), 0.0)
        self.assertTrue(np.isfinite(k))


class TestImportanceSurrogates(TestCase):
    """Tests for TIS, PSIS and plain IS against the exact conjugate oracle."""

    @classmethod
    def setUpClass(cls):
        """Set up a conjugate regression with exact LOO values."""
        cls.data = simulate_blr(100, 5, 0.5, sparse=False, seed=17)
        cls.prior = NormalInverseGammaPrior.isotropic(5)
        posterior = fit_conjugate_blr(cls.data, cls.prior)
        draws = draw_posterior(posterior, 4000, seed=17)
        cls.loglik = loglik_matrix(cls.data, draws)
        cls.exact = exact_loo_blr(cls.data, cls.prior)

    def test_psis_accuracy(self):
        """Test PSIS per-observation error and Pareto k diagnostics."""
        surrogate = psis_surrogate(self.loglik)
        self.assertEqual(surrogate.method, SurrogateMethod.PSIS)
        errors = np.abs(surrogate.values - self.exact)
        self.assertGreaterEqual(np.mean(errors < 0.05), 0.95)
        self.assertTrue(np.all(surrogate.diagnostics < PARETO_K_THRESHOLD))

    def test_tis_accuracy(self):
        """Test TIS per-observation error."""
        surrogate = tis_surrogate(self.loglik)
        self.assertEqual(surrogate.method, SurrogateMethod.TIS)
        self.assertGreaterEqual(np.mean(np.abs(surrogate.values - self.exact) < 0.05), 0.95)

    def test_waic_total(self):
        """Test that the WAIC total is close to the exact elpd_loo."""
        self.assertLess(abs(waic_surrogate(self.loglik).total - np.sum(self.exact)), 1.0)

    def test_plain_importance_sampling(self):
        """Test the untruncated estimator and its tag."""
        surrogate = importance_loo(self.loglik)
        self.assertEqual(surrogate.method, SurrogateMethod.IS)
        self.assertGreaterEqual(np.mean(np.abs(surrogate.values - self.exact) < 0.05), 0.95)

    def test_tis_reads_only_leading_draws(self):
        """Test that a reduced-draw TIS touches only the first rows."""
        with mock.patch.object(self.loglik, "head", wraps=self.loglik.head) as head:
            surrogate = tis_surrogate(self.loglik, draws_used=100)
        head.assert_called_once_with(100)
        self.assertEqual(surrogate.draws_used, 100)

    def test_constant_correction_has_no_effect(self):
        """Test that a constant log correction leaves self-normalized estimates unchanged."""
        base = tis_surrogate(self.loglik, draws_used=200)
        corrected = tis_surrogate(self.loglik, draws_used=200, log_correction=np.full(4000, 3.0))
        np.testing.assert_allclose(base.values, corrected.values, atol=1e-12)

    def test_correction_length_checked(self):
        """Test that a correction of the wrong length is rejected."""
        with self.assertRaises(InputValidationError):
            tis_surrogate(self.loglik, log_correction=np.zeros(10))

    def test_columns_match_full_surrogate(self):
        """Test that PSIS on selected columns equals the full computation."""
        full = psis_surrogate(self.loglik)
        values, k = psis_loo_columns(self.loglik, [7, 3, 7])
        np.testing.assert_array_equal(values, full.values[[7, 3, 7]])
        np.testing.assert_array_equal(k, full.diagnostics[[7, 3, 7]])

    def test_psis_needs_enough_draws(self):
        """Test that PSIS refuses fewer than 25 draws."""
        small = LogLikMatrix(self.loglik.head(24))
        with self.assertRaises(InputValidationError):
            psis_surrogate(small)


class TestImportanceEdgeCases(TestCase):
    """Tests for Pareto k on heavy-tailed ratios and for the unsmoothed paths."""

    def test_pareto_k_of_heavy_tailed_ratios(self):
        """Test k-hat near 0.5 when the ratios follow a GPD with shape 0.5."""
        ratios = 1.0 + stats.genpareto.rvs(c=0.5, size=(4000, 20), random_state=np.random.default_rng(31))
        surrogate = psis_surrogate(LogLikMatrix(-np.log(ratios)))
        k_hat = surrogate.diagnostics
        self.assertGreater(np.median(k_hat), 0.35)
        self.assertLess(np.median(k_hat), 0.65)
        self.assertTrue(np.all((k_hat > 0.1) & (k_hat < 0.9)))

    def test_psis_equals_tis_for_flat_tail(self):
        """Test that PSIS without smoothing agrees with TIS when truncation does not bind."""
        rng = np.random.default_rng(32)
        values = rng.uniform(-2.0, -1.0, size=(100, 2))
        # 30 draws share the smallest log-likelihood, so the 20 largest ratios are equal
        values[:30, 0] = -3.0
        values[40:70, 1] = -3.5
        loglik = LogLikMatrix(values)
        psis = psis_surrogate(loglik)
        self.assertTrue(np.all(psis.diagnostics == float("-inf")))
        np.testing.assert_allclose(psis.values, tis_surrogate(loglik).values, rtol=0, atol=1e-9)

    def test_untruncated_is_plain_self_normalized(self):
        """Test that disabling truncation gives log S - logsumexp(-log p) per column."""
        values = np.random.default_rng(33).normal(-1.0, 0.8, size=(300, 6))
        surrogate = tis_surrogate(LogLikMatrix(values), draws_used=200, truncate=False)
        expected = np.log(200) - logsumexp(-values[:200], axis=0)
        np.testing.assert_allclose(surrogate.values, expected, rtol=0, atol=1e-12)
        self.assertEqual(surrogate.method, SurrogateMethod.IS)
