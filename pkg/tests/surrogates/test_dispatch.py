"""Tests for surrogate selection by name and exact-value lookup."""

from unittest import TestCase, mock

import numpy as np

from loo_subsample.errors import InputValidationError
from loo_subsample.estimators.difference import diff_variance
from loo_subsample.models.blr import (
    NormalInverseGammaPrior,
    draw_posterior,
    exact_loo_blr,
    fit_conjugate_blr,
    loglik_matrix,
    per_obs_derivatives,
    point_loglik,
    simulate_blr,
    summarize_draws,
)
from loo_subsample.sampling.plans import srs_wor
from loo_subsample.surrogates.dispatch import SurrogateName, compute_surrogate, exact_at_sample
from loo_subsample.surrogates.pointwise import delta_peff, delta_waic_surrogate
from loo_subsample.surrogates.types import LogLikMatrix, SurrogateMethod


class TestDrawMatrixAccess(TestCase):
    """plpd and the marginal delta surrogate must not read the draw matrix."""

    def setUp(self):
        """Set up test environment."""
        self.data = simulate_blr(60, 3, 0.5, sparse=False, seed=21)
        self.draws = draw_posterior(fit_conjugate_blr(self.data), 1000, seed=21)
        self.loglik = loglik_matrix(self.data, self.draws)

    def _spied(self, name):
        full = self.loglik.values
        with mock.patch.object(self.loglik, "head", wraps=self.loglik.head) as head, \
                mock.patch.object(LogLikMatrix, "values", new_callable=mock.PropertyMock,
                                  return_value=full) as values:
            surrogate = compute_surrogate(name, self.loglik, dataset=self.data, draws=self.draws)
        rows = sum(call.args[0] for call in head.call_args_list)
        return surrogate, rows, values.call_count

    def test_plpd_reads_no_draws(self):
        """Test that plpd is computed from the point estimate alone."""
        surrogate, rows, full_reads = self._spied("plpd")
        self.assertLessEqual(rows, 1)
        self.assertEqual(full_reads, 0)
        self.assertEqual(surrogate.draws_used, 1)

    def test_marginal_delta_reads_no_draws(self):
        """Test that delta1_waic_m reads at most one row of the draw matrix."""
        surrogate, rows, full_reads = self._spied("delta1_waic_m")
        self.assertLessEqual(rows, 1)
        self.assertEqual(full_reads, 0)
        self.assertEqual(surrogate.method, SurrogateMethod.DELTA1_WAIC_M)
        self.assertEqual(surrogate.draws_used, 1)

    def test_marginal_delta_values(self):
        """Test delta1_waic_m as the point log-likelihood minus the marginal p_eff."""
        summary = summarize_draws(self.draws)
        derivs = per_obs_derivatives(self.data, summary.mean)
        point = point_loglik(self.data, summary.mean)
        peff = np.array([delta_peff(g, None, summary, "1m") for g in derivs.gradients])
        surrogate = compute_surrogate("delta1_waic_m", self.loglik, dataset=self.data, draws=self.draws)
        np.testing.assert_allclose(surrogate.values, point - peff, rtol=1e-12)

    def test_marginal_delta_needs_point_values(self):
        """Test that the marginal order cannot fall back to the draw matrix."""
        summary = summarize_draws(self.draws)
        derivs = per_obs_derivatives(self.data, summary.mean)
        with self.assertRaises(InputValidationError):
            delta_waic_surrogate(self.loglik, derivs, summary, "1m")
        with self.assertRaises(InputValidationError):
            delta_waic_surrogate(self.loglik, derivs, summary, "1m", point_values=np.zeros(5))

    def test_full_order_delta_reads_requested_draws(self):
        """Test that delta1_waic reads exactly draws_used rows."""
        with mock.patch.object(self.loglik, "head", wraps=self.loglik.head) as head:
            surrogate = compute_surrogate(
                "delta1_waic", self.loglik, draws_used=200, dataset=self.data, draws=self.draws
            )
        head.assert_called_once_with(200)
        self.assertEqual(surrogate.draws_used, 200)


class TestDifferenceEstimatorEfficiency(TestCase):
    """Better surrogates give a smaller difference-estimator standard error."""

    @classmethod
    def setUpClass(cls):
        """Set up the mean estimated standard error per surrogate over 100 shared plans."""
        data = simulate_blr(200, 3, 0.5, sparse=False, seed=8)
        prior = NormalInverseGammaPrior.isotropic(3)
        draws = draw_posterior(fit_conjugate_blr(data, prior), 2000, seed=8)
        loglik = loglik_matrix(data, draws)
        exact = exact_loo_blr(data, prior)
        names = ("plpd", "delta1_waic_m", "delta2_waic")
        surrogates = {name: compute_surrogate(name, loglik, dataset=data, draws=draws) for name in names}
        cls.mean_se = {name: 0.0 for name in names}
        for replicate in range(100):
            plan = srs_wor(data.n, 40, seed=1000 + replicate)
            sample, _ = exact_at_sample(plan, exact=exact)
            for name in names:
                cls.mean_se[name] += np.sqrt(diff_variance(surrogates[name], sample, plan)) / 100

    def test_marginal_delta_beats_plpd(self):
        """Test that the marginal p_eff correction lowers the standard error."""
        self.assertLess(self.mean_se["delta1_waic_m"], self.mean_se["plpd"])

    def test_second_order_beats_marginal(self):
        """Test that order 2 with the full lpd is the most efficient of the three."""
        self.assertLess(self.mean_se["delta2_waic"], self.mean_se["delta1_waic_m"])


class TestSurrogateNames(TestCase):
    """Tests for name handling in compute_surrogate."""

    def setUp(self):
        """Set up test environment."""
        self.loglik = LogLikMatrix(np.random.default_rng(3).normal(-1.0, 0.2, size=(30, 8)))

    def test_unknown_name(self):
        """Test that an unknown name lists the choices."""
        with self.assertRaises(InputValidationError) as ctx:
            compute_surrogate("loo", self.loglik)
        self.assertIn("delta1_waic_m", str(ctx.exception))

    def test_model_surrogates_need_inputs(self):
        """Test that plpd and delta surrogates need a dataset and draws."""
        for name in SurrogateName:
            if name.needs_model:
                with self.subTest(name=name.value):
                    with self.assertRaises(InputValidationError):
                        compute_surrogate(name.value, self.loglik)
