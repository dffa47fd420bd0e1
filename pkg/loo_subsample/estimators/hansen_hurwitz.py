"""Hansen-Hurwitz estimator for probability-proportional-to-size samples with replacement."""

import logging

import numpy as np

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError
from loo_subsample.numerics.core import sample_variance
from loo_subsample.sampling.plans import SamplingScheme, SubsamplePlan

logger = logging.getLogger(__name__)


def _expanded_values(exact_at_sample: np.ndarray, plan: SubsamplePlan) -> np.ndarray:
    if plan.scheme != SamplingScheme.PPS_WR or plan.draw_probs is None:
        raise InputValidationError("The Hansen-Hurwitz estimator needs a pps_wr plan with draw probabilities")
    exact = np.asarray(exact_at_sample, dtype=float)
    if exact.ndim != 1 or exact.shape[0] != plan.m:
        raise InputValidationError(
            f"Expected {plan.m} exact values aligned with the plan, got shape {exact.shape}"
        )
    if not np.all(np.isfinite(exact)):
        raise InputValidationError("Exact LOO values contain non-finite entries")
    probs = plan.draw_probs[plan.indices]
    if np.any(probs <= 0):
        raise NumericalDegeneracyError("A sampled unit has zero draw probability")
    return exact / probs


def hh_elpd(exact_at_sample: np.ndarray, plan: SubsamplePlan) -> float:
    """
    Hansen-Hurwitz total (1/m) sum_j pi_j / p_j over the m draws.

    Args:
        exact_at_sample: Exact LOO values of the drawn units, in draw order.
        plan: A pps_wr plan.

    Returns:
        Estimate of sum(pi).
    """
    return float(np.mean(_expanded_values(exact_at_sample, plan)))


def hh_variance(exact_at_sample: np.ndarray, plan: SubsamplePlan) -> float:
    """
    Unbiased variance estimate of ``hh_elpd``: sample variance of pi_j / p_j divided by m.

    Raises:
        NumericalDegeneracyError: If m < 2.
    """
    expanded = _expanded_values(exact_at_sample, plan)
    if plan.m < 2:
        raise NumericalDegeneracyError("Hansen-Hurwitz variance needs m >= 2")
    return sample_variance(expanded) / plan.m
