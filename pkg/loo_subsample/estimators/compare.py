"""Single-model estimates and pairwise model comparison from one shared subsample."""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from loo_subsample.errors import InputValidationError
from loo_subsample.estimators.difference import (
    diff_elpd,
    diff_sigma2_loo,
    diff_variance,
    diff_variance_wr,
)
from loo_subsample.estimators.hansen_hurwitz import hh_elpd, hh_variance
from loo_subsample.estimators.results import ComparisonResult, ElpdEstimate, EstimatorKind
from loo_subsample.sampling.plans import SamplingScheme, SubsamplePlan
from loo_subsample.surrogates.types import SurrogateVector

logger = logging.getLogger(__name__)


def _difference_parts(
    surrogate: SurrogateVector,
    exact_at_sample: np.ndarray,
    plan: SubsamplePlan,
) -> Tuple[float, float, float]:
    """Return (elpd_hat, variance, raw sigma^2_loo) for an SRS plan."""
    elpd_hat = diff_elpd(surrogate, exact_at_sample, plan)
    if plan.scheme == SamplingScheme.SRS_WOR:
        variance = diff_variance(surrogate, exact_at_sample, plan)
    else:
        variance = diff_variance_wr(surrogate, exact_at_sample, plan)
    sigma2 = diff_sigma2_loo(surrogate, exact_at_sample, plan, elpd_hat, variance)
    return elpd_hat, variance, sigma2


def _clamp_sigma2(sigma2: float, label: str) -> Tuple[float, bool]:
    if sigma2 < 0:
        logger.warning(f"Raw sigma^2 estimate for {label} is negative ({sigma2:.6g}); clamped to 0")
        return 0.0, True
    return sigma2, False


def estimate_model(
    surrogate: SurrogateVector,
    exact_at_sample: np.ndarray,
    plan: SubsamplePlan,
) -> ElpdEstimate:
    """
    Estimate elpd_loo of one model from a surrogate and exact values at a subsample.

    srs_wor and srs_wr plans use the difference estimator; pps_wr plans use
    Hansen-Hurwitz, for which sigma_loo is not estimated.

    Args:
        surrogate: Approximate LOO values for all n observations.
        exact_at_sample: Exact LOO values at the plan's indices, in plan order.
        plan: The subsample plan.

    Returns:
        ElpdEstimate on the total scale.
    """
    if plan.scheme == SamplingScheme.PPS_WR:
        elpd_hat = hh_elpd(exact_at_sample, plan)
        variance = hh_variance(exact_at_sample, plan)
        estimate = ElpdEstimate(
            elpd_hat=elpd_hat,
            se_subsampling=math.sqrt(variance),
            sigma_loo_hat=None,
            n=plan.n,
            m=plan.m,
            estimator=EstimatorKind.HANSEN_HURWITZ,
            surrogate_method=surrogate.method.value,
            scheme=plan.scheme.value,
        )
    else:
        elpd_hat, variance, sigma2 = _difference_parts(surrogate, exact_at_sample, plan)
        sigma2, degenerate = _clamp_sigma2(sigma2, "sigma_loo")
        estimate = ElpdEstimate(
            elpd_hat=elpd_hat,
            se_subsampling=math.sqrt(variance),
            sigma_loo_hat=math.sqrt(sigma2),
            n=plan.n,
            m=plan.m,
            estimator=EstimatorKind.DIFFERENCE,
            surrogate_method=surrogate.method.value,
            scheme=plan.scheme.value,
            sigma_loo_degenerate=degenerate,
        )
    logger.info(
        f"elpd_hat={estimate.elpd_hat:.4f} se={estimate.se_subsampling:.4f} "
        f"({estimate.estimator.value}, {estimate.surrogate_method}, m={plan.m}/{plan.n})"
    )
    return estimate


def _same_plan(plan_a: SubsamplePlan, plan_b: SubsamplePlan) -> bool:
    return (
        plan_a.n == plan_b.n
        and plan_a.scheme == plan_b.scheme
        and np.array_equal(plan_a.indices, plan_b.indices)
    )


def compare_models(
    surr_a: SurrogateVector,
    surr_b: SurrogateVector,
    exact_a_at_sample: np.ndarray,
    exact_b_at_sample: np.ndarray,
    plan: SubsamplePlan,
    plan_b: Optional[SubsamplePlan] = None,
) -> ComparisonResult:
    """
    Estimate elpd_A - elpd_B from one subsample shared by both models.

    The difference estimator is applied to the pointwise differences, so the
    covariance between the two models' LOO values is accounted for. The naive
    standard deviation treats the models as independent.

    Args:
        surr_a: Surrogate of model A.
        surr_b: Surrogate of model B.
        exact_a_at_sample: Exact LOO values of model A at the plan's indices.
        exact_b_at_sample: Exact LOO values of model B at the same indices.
        plan: The shared srs_wor or srs_wr plan.
        plan_b: Plan used for model B when it was drawn separately; must equal ``plan``.

    Returns:
        ComparisonResult with per-model estimates for A and B.

    Raises:
        InputValidationError: If the models disagree on n or use different plans.
    """
    if surr_a.obs_count != surr_b.obs_count:
        raise InputValidationError(
            f"Models cover different observation counts: {surr_a.obs_count} and {surr_b.obs_count}"
        )
    if plan_b is not None and not _same_plan(plan, plan_b):
        raise InputValidationError("Model comparison requires one subsample plan shared by both models")
    if plan.scheme == SamplingScheme.PPS_WR:
        raise InputValidationError("Model comparison uses the difference estimator; draw an srs plan")
    exact_a = np.asarray(exact_a_at_sample, dtype=float)
    exact_b = np.asarray(exact_b_at_sample, dtype=float)
    if exact_a.shape != exact_b.shape:
        raise InputValidationError(
            f"Exact values have different shapes: {exact_a.shape} and {exact_b.shape}"
        )

    estimate_a = estimate_model(surr_a, exact_a, plan)
    estimate_b = estimate_model(surr_b, exact_b, plan)

    surr_d = SurrogateVector(
        values=surr_a.values - surr_b.values,
        method=surr_a.method,
        draws_used=min(surr_a.draws_used, surr_b.draws_used),
    )
    elpd_d, variance_d, sigma2_d = _difference_parts(surr_d, exact_a - exact_b, plan)
    sigma2_d, degenerate = _clamp_sigma2(sigma2_d, "sigma_D")

    naive = math.sqrt(estimate_a.sigma_loo_hat ** 2 + estimate_b.sigma_loo_hat ** 2)
    result = ComparisonResult(
        elpd_d_hat=elpd_d,
        se_d=math.sqrt(variance_d),
        sigma_d_hat=math.sqrt(sigma2_d),
        naive_sigma_d=naive,
        per_model=[estimate_a, estimate_b],
        sigma_d_degenerate=degenerate,
    )
    logger.info(
        f"elpd_D={result.elpd_d_hat:.4f} se_D={result.se_d:.4f} "
        f"sigma_D={result.sigma_d_hat:.4f} naive={result.naive_sigma_d:.4f}"
    )
    return result
