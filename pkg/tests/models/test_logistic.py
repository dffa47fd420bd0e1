"""Tests for the logistic regression model and its refit oracle."""

from unittest import TestCase, mock

import numpy as np

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError
from loo_subsample.models import logistic
from loo_subsample.models.blr import draw_gaussian
from loo_subsample.models.logistic import (
    LogisticDataset,
    logistic_derivatives,
    logistic_laplace,
    logistic_log_correction,
    logistic_loglik_matrix,
    logistic_point_loglik,
    logistic_refit_loo,
    simulate_logistic,
)
from loo_subsample.surrogates.importance import psis_surrogate
from loo_subsample.surrogates.pointwise import delta_waic_surrogate


class TestLogisticDataset(TestCase):
    """Tests for LogisticDataset and simulate_logistic."""

    def test_simulation_has_intercept(self):
        """Test the intercept column and binary responses."""
        data = simulate_logistic(100, 3, seed=1)
        np.testing.assert_array_equal(data.design[:, 0], 1.0)
        self.assertTrue(set(np.unique(data.response)) <= {0.0, 1.0})
        self.assertEqual(data.true_beta[0], 0.0)

    def test_non_binary_response(self):
        """Test that responses outside {0, 1} are rejected."""
        with self.assertRaises(InputValidationError):
            LogisticDataset(design=np.ones((2, 1)), response=np.array([0.0, 2.0]))

    def test_without(self):
        """Test removal of one observation."""
        data = simulate_logistic(10, 2, seed=2)
        reduced = data.without(3)
        self.assertEqual(reduced.n, 9)
        np.testing.assert_array_equal(reduced.design[3], data.design[4])


class TestLaplaceFit(TestCase):
    """Tests for logistic_laplace."""

    def test_symmetric_data_has_zero_intercept(self):
        """Test that data symmetric under sign flip gives a zero intercept."""
        x = np.array([-2.0, -1.0, 1.0, 2.0])
        data = LogisticDataset(design=np.column_stack([np.ones(4), x]), response=np.array([0.0, 1.0, 0.0, 1.0]))
        summary = logistic_laplace(data)
        self.assertAlmostEqual(summary.mean[0], 0.0, places=8)

    def test_gradient_vanishes_at_mode(self):
        """Test the stationarity of the returned mode."""
        data = simulate_logistic(300, 3, seed=3)
        summary = logistic_laplace(data, prior_sd=2.5, tol=1e-10)
        gradient = logistic_derivatives(data, summary.mean).gradients.sum(axis=0) - summary.mean / 2.5 ** 2
        self.assertLess(np.max(np.abs(gradient)), 1e-10)
        self.assertTrue(summary.is_psd)

    def test_iteration_limit(self):
        """Test that running out of iterations is an error."""
        data = simulate_logistic(50, 2, seed=4)
        with self.assertRaises(NumericalDegeneracyError):
            logistic_laplace(data, max_iter=0)

    def test_separable_data_diverges(self):
        """Test separation with a tiny margin under a flat prior."""
        x = np.array([-0.02, -0.01, 0.01, 0.02])
        data = LogisticDataset(design=np.column_stack([np.ones(4), x]), response=np.array([0.0, 0.0, 1.0, 1.0]))
        with self.assertRaises(NumericalDegeneracyError):
            logistic_laplace(data, prior_sd=1e6)


    def test_near_separation_warns(self):
        """Test a warning when the prior alone keeps a separable fit finite."""
        x = np.linspace(-10.0, 10.0, 40)
        data = LogisticDataset(design=np.column_stack([np.ones(40), x]), response=(x > 0).astype(float))
        with self.assertLogs("loo_subsample.models.logistic", level="WARNING") as logs:
            summary = logistic_laplace(data)
        self.assertIn("close to separation", logs.output[0])
        self.assertTrue(np.all(np.isfinite(summary.mean)))

    def test_ordinary_fit_does_not_warn(self):
        """Test no separation warning for well-mixed responses."""
        data = simulate_logistic(200, 3, seed=9)
        with mock.patch.object(logistic.logger, "warning") as warning:
            logistic_laplace(data)
        warning.assert_not_called()


class TestLogisticLikelihood(TestCase):
    """Tests for the log-likelihood and its derivatives."""

    def setUp(self):
        """Set up test environment."""
        self.data = simulate_logistic(20, 3, seed=5)
        self.rng = np.random.default_rng(5)

    def test_matrix_matches_point(self):
        """Test that matrix rows equal single-draw evaluations."""
        draws = self.rng.normal(size=(4, 3))
        matrix = logistic_loglik_matrix(self.data, draws).values
        for s in range(4):
            np.testing.assert_allclose(matrix[s], logistic_point_loglik(self.data, draws[s]), rtol=1e-14)
        self.assertTrue(np.all(matrix <= 0.0))

    def test_derivatives_match_finite_differences(self):
        """Test gradients and Hessians on random parameter values."""
        eps = 1e-5
        for _ in range(5):
            theta = self.rng.normal(size=3)
            derivs = logistic_derivatives(self.data, theta, with_hessians=True)
            grads, hessians = [], []
            for j in range(3):
                step = np.zeros(3)
                step[j] = eps
                up = logistic_point_loglik(self.data, theta + step)
                down = logistic_point_loglik(self.data, theta - step)
                grads.append((up - down) / (2 * eps))
                up = logistic_derivatives(self.data, theta + step).gradients
                down = logistic_derivatives(self.data, theta - step).gradients
                hessians.append((up - down) / (2 * eps))
            np.testing.assert_allclose(derivs.gradients, np.column_stack(grads), rtol=1e-6, atol=1e-8)
            np.testing.assert_allclose(derivs.hessians, np.stack(hessians, axis=2), rtol=1e-5, atol=1e-8)

    def test_draw_columns_checked(self):
        """Test draws of the wrong width."""
        with self.assertRaises(InputValidationError):
            logistic_loglik_matrix(self.data, np.zeros((2, 4)))


class TestRefitOracle(TestCase):
    """Tests for logistic_refit_loo."""

    def test_size_limit(self):
        """Test that the refit oracle refuses large datasets."""
        data = simulate_logistic(501, 2, seed=6)
        with self.assertRaises(InputValidationError):
            logistic_refit_loo(data)

    def test_thread_count_does_not_change_values(self):
        """Test identical values for one and four threads."""
        data = simulate_logistic(40, 2, seed=7)
        np.testing.assert_array_equal(logistic_refit_loo(data, threads=1), logistic_refit_loo(data, threads=4))

    def test_corrected_psis_agrees(self):
        """Test PSIS from Laplace draws with a density correction against refitting."""
        data = simulate_logistic(200, 3, seed=8)
        summary = logistic_laplace(data)
        draws = draw_gaussian(summary, 4000, seed=8)
        correction = logistic_log_correction(data, draws, summary)
        surrogate = psis_surrogate(logistic_loglik_matrix(data, draws), log_correction=correction)
        oracle = logistic_refit_loo(data)
        self.assertLess(np.mean(np.abs(surrogate.values - oracle)), 0.05)

    def test_delta_waic_agrees(self):
        """Test first- and second-order delta-WAIC from Laplace draws against refitting."""
        data = simulate_logistic(200, 3, seed=10)
        summary = logistic_laplace(data)
        loglik = logistic_loglik_matrix(data, draw_gaussian(summary, 4000, seed=10))
        derivs = logistic_derivatives(data, summary.mean, with_hessians=True)
        oracle = logistic_refit_loo(data)
        for order in ("1", "2"):
            with self.subTest(order=order):
                surrogate = delta_waic_surrogate(loglik, derivs, summary, order)
                self.assertLess(np.mean(np.abs(surrogate.values - oracle)), 0.05)
