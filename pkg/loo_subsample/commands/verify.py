"""Enumeration self-check of the difference estimator.

For small populations every size-m subsample can be listed, so expectations
over the design are exact sums rather than Monte-Carlo averages.
"""

import logging
from typing import Any, Dict, Iterable, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from loo_subsample.config import RunConfig
from loo_subsample.errors import InvariantViolationError
from loo_subsample.estimators.difference import diff_elpd, diff_sigma2_loo, diff_variance
from loo_subsample.formats.reports import emit_report
from loo_subsample.sampling.plans import enumerate_subsamples_wor, plan_from_indices
from loo_subsample.surrogates.pointwise import exact_surrogate
from loo_subsample.utils.rng import StreamPurpose, make_generator

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (6, 8, 10)
DEFAULT_SUBSAMPLE_SIZES = (2, 3, 4)
DEFAULT_PAIRS = 20
TOLERANCE = 1e-9


class EnumerationMoments(BaseModel):
    """Design expectations over all subsamples next to their population targets."""
    model_config = ConfigDict(frozen=True)

    mean_elpd: float
    total: float
    mean_sigma2: float
    population_variance: float
    mean_variance_estimate: float
    estimator_variance: float

    @property
    def deviations(self) -> Tuple[float, float, float]:
        return (
            abs(self.mean_elpd - self.total),
            abs(self.mean_sigma2 - self.population_variance),
            abs(self.mean_variance_estimate - self.estimator_variance),
        )


class VerifyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid_n: Tuple[int, ...]
    grid_m: Tuple[int, ...]
    pairs: int
    cases: int
    max_elpd_deviation: float
    max_sigma2_deviation: float
    max_variance_deviation: float
    tolerance: float
    passed: bool


def enumeration_moments(exact: np.ndarray, approx: np.ndarray, m: int) -> EnumerationMoments:
    """
    Exact design moments of the difference estimator under SRS without replacement.

    Args:
        exact: Exact LOO values for the whole population.
        approx: Surrogate values for the whole population.
        m: Subsample size.
    """
    exact = np.asarray(exact, dtype=float)
    n = exact.shape[0]
    surrogate = exact_surrogate(approx)
    elpd, variance, sigma2 = [], [], []
    for subset in enumerate_subsamples_wor(n, m):
        plan = plan_from_indices(subset, n)
        at_sample = exact[plan.indices]
        estimate = diff_elpd(surrogate, at_sample, plan)
        var_hat = diff_variance(surrogate, at_sample, plan)
        elpd.append(estimate)
        variance.append(var_hat)
        sigma2.append(diff_sigma2_loo(surrogate, at_sample, plan, estimate, var_hat))
    elpd_arr = np.array(elpd)
    return EnumerationMoments(
        mean_elpd=float(np.mean(elpd_arr)),
        total=float(np.sum(exact)),
        mean_sigma2=float(np.mean(sigma2)),
        population_variance=float(np.var(exact)),
        mean_variance_estimate=float(np.mean(variance)),
        estimator_variance=float(np.var(elpd_arr)),
    )


def random_pair(seed: int, n: int, m: int, pair: int) -> Tuple[np.ndarray, np.ndarray]:
    """A random (exact, surrogate) population with a correlated surrogate."""
    rng = make_generator(seed, StreamPurpose.ORACLE, n, m, pair)
    exact = rng.normal(-1.0, 1.0, size=n)
    approx = exact + rng.normal(0.0, 0.3, size=n)
    return exact, approx


def run_enumeration_suite(
    seed: int = 0,
    sizes: Iterable[int] = DEFAULT_SIZES,
    subsample_sizes: Iterable[int] = DEFAULT_SUBSAMPLE_SIZES,
    pairs: int = DEFAULT_PAIRS,
    tolerance: float = TOLERANCE,
) -> VerifyReport:
    """Check unbiasedness of the elpd and sigma^2 estimators and of the variance formula on a grid."""
    sizes, subsample_sizes = tuple(sizes), tuple(subsample_sizes)
    worst = np.zeros(3)
    cases = 0
    for n in sizes:
        for m in subsample_sizes:
            for pair in range(pairs):
                exact, approx = random_pair(seed, n, m, pair)
                worst = np.maximum(worst, enumeration_moments(exact, approx, m).deviations)
                cases += 1
    passed = bool(np.all(worst < tolerance))
    logger.info(f"Enumeration suite: {cases} cases, max deviations {worst.tolist()}, passed={passed}")
    return VerifyReport(
        grid_n=sizes,
        grid_m=subsample_sizes,
        pairs=pairs,
        cases=cases,
        max_elpd_deviation=float(worst[0]),
        max_sigma2_deviation=float(worst[1]),
        max_variance_deviation=float(worst[2]),
        tolerance=tolerance,
        passed=passed,
    )


def cmd_verify(config: RunConfig) -> Dict[str, Any]:
    """
    Run the enumeration suite and emit its report.

    Raises:
        InvariantViolationError: If any deviation reaches the tolerance.
    """
    report = run_enumeration_suite(seed=config.seed if config.seed is not None else 0)
    payload = report.model_dump(mode="json")
    emit_report(payload, config.out)
    if not report.passed:
        raise InvariantViolationError(
            f"Enumeration check failed: deviations {report.max_elpd_deviation:.3e}, "
            f"{report.max_sigma2_deviation:.3e}, {report.max_variance_deviation:.3e}"
        )
    return payload
