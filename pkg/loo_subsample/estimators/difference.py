"""Difference estimator of elpd_loo, its subsampling variance and sigma^2_loo.

With pi_i the exact LOO value and pi~_i a surrogate known for all n
observations, the total sum(pi) is estimated by

    sum(pi~) + (n / m) * sum_{j in S} (pi_j - pi~_j)

which is unbiased for any surrogate under simple random sampling.
"""

import logging
from typing import Tuple

import numpy as np

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError
from loo_subsample.numerics.core import sample_variance
from loo_subsample.sampling.plans import SamplingScheme, SubsamplePlan
from loo_subsample.surrogates.types import SurrogateVector

logger = logging.getLogger(__name__)


def _residuals(
    surrogate: SurrogateVector,
    exact_at_sample: np.ndarray,
    plan: SubsamplePlan,
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (exact values, surrogate values) at the sampled units, in plan order."""
    if surrogate.obs_count != plan.n:
        raise InputValidationError(
            f"Surrogate covers {surrogate.obs_count} observations but the plan population is {plan.n}"
        )
    exact = np.asarray(exact_at_sample, dtype=float)
    if exact.ndim != 1 or exact.shape[0] != plan.m:
        raise InputValidationError(
            f"Expected {plan.m} exact values aligned with the plan, got shape {exact.shape}"
        )
    if not np.all(np.isfinite(exact)):
        raise InputValidationError("Exact LOO values contain non-finite entries")
    if plan.scheme == SamplingScheme.PPS_WR:
        raise InputValidationError(
            "The difference estimator needs an srs_wor or srs_wr plan; use hh_elpd for pps_wr"
        )
    return exact, surrogate.values[plan.indices]


def diff_elpd(surrogate: SurrogateVector, exact_at_sample: np.ndarray, plan: SubsamplePlan) -> float:
    """
    Difference-estimator total of the LOO values.

    Args:
        surrogate: Approximate LOO values for all n observations.
        exact_at_sample: Exact LOO values for the plan's indices, in plan order.
        plan: The subsample plan (srs_wor or srs_wr).

    Returns:
        Estimate of sum(pi) on the total scale.
    """
    exact, approx = _residuals(surrogate, exact_at_sample, plan)
    return surrogate.total + plan.n / plan.m * float(np.sum(exact - approx))


def diff_variance(surrogate: SurrogateVector, exact_at_sample: np.ndarray, plan: SubsamplePlan) -> float:
    """
    Subsampling variance of ``diff_elpd`` under SRS without replacement.

    n^2 (1 - m/n) s_e^2 / m, with s_e^2 the sample variance of the residuals.

    Raises:
        InputValidationError: For a with-replacement plan (see ``diff_variance_wr``).
        NumericalDegeneracyError: If m < 2.
    """
    if plan.scheme != SamplingScheme.SRS_WOR:
        raise InputValidationError(
            f"diff_variance assumes an srs_wor plan, got {plan.scheme.value}; "
            f"use diff_variance_wr for with-replacement plans"
        )
    exact, approx = _residuals(surrogate, exact_at_sample, plan)
    if plan.m < 2:
        raise NumericalDegeneracyError("Subsampling variance needs m >= 2")
    n, m = plan.n, plan.m
    return n * n * (1.0 - m / n) * sample_variance(exact - approx) / m


def diff_variance_wr(surrogate: SurrogateVector, exact_at_sample: np.ndarray, plan: SubsamplePlan) -> float:
    """Subsampling variance of ``diff_elpd`` under SRS with replacement, n^2 s_e^2 / m."""
    if plan.scheme != SamplingScheme.SRS_WR:
        raise InputValidationError(f"diff_variance_wr assumes an srs_wr plan, got {plan.scheme.value}")
    exact, approx = _residuals(surrogate, exact_at_sample, plan)
    if plan.m < 2:
        raise NumericalDegeneracyError("Subsampling variance needs m >= 2")
    return plan.n ** 2 * sample_variance(exact - approx) / plan.m


def diff_sigma2_loo(
    surrogate: SurrogateVector,
    exact_at_sample: np.ndarray,
    plan: SubsamplePlan,
    elpd_hat: float,
    var_hat: float,
) -> float:
    """
    Unbiased estimate of sigma^2_loo = mean(pi^2) - mean(pi)^2.

    Assembled as a_hat - b_hat where a_hat estimates mean(pi^2) with pi~^2 as
    auxiliary variable and b_hat estimates mean(pi)^2 with the variance of the
    residual total subtracted. The raw value is returned and can be negative for
    small m; ``estimate_model`` clamps it.

    Args:
        surrogate: Approximate LOO values for all n observations.
        exact_at_sample: Exact LOO values at the plan's indices.
        plan: The subsample plan.
        elpd_hat: ``diff_elpd`` for the same inputs.
        var_hat: Matching subsampling variance (``diff_variance`` or ``diff_variance_wr``).

    Returns:
        The raw sigma^2_loo estimate on the per-observation scale.
    """
    exact, approx = _residuals(surrogate, exact_at_sample, plan)
    if plan.m < 2:
        raise NumericalDegeneracyError("sigma^2_loo estimation needs m >= 2")
    n, m = plan.n, plan.m
    t_approx = surrogate.total
    t_approx_sq = float(np.sum(surrogate.values ** 2))
    t_hat_resid = n / m * float(np.sum(exact - approx))
    t_hat_sq_resid = n / m * float(np.sum(exact ** 2 - approx ** 2))

    a_hat = (t_approx_sq + t_hat_sq_resid) / n
    b_hat = (t_hat_resid ** 2 - var_hat + 2.0 * t_approx * elpd_hat - t_approx ** 2) / n ** 2
    return a_hat - b_hat
