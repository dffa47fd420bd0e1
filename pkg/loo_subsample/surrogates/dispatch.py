"""Compute a surrogate by name and look up exact LOO values at a subsample."""

import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from loo_subsample.errors import InputValidationError
from loo_subsample.models.blr import BlrDataset, per_obs_derivatives, point_loglik, summarize_draws
from loo_subsample.sampling.plans import SubsamplePlan
from loo_subsample.surrogates.importance import importance_loo, psis_loo_columns, psis_surrogate, tis_surrogate
from loo_subsample.surrogates.pointwise import (
    DeltaOrder,
    delta_waic_surrogate,
    exact_surrogate,
    plpd_surrogate,
    waic_surrogate,
    zero_surrogate,
)
from loo_subsample.surrogates.types import LogLikMatrix, SurrogateVector

logger = logging.getLogger(__name__)


class SurrogateName(str, Enum):
    """Surrogate names accepted on the command line."""
    PLPD = "plpd"
    WAIC = "waic"
    TIS = "tis"
    PSIS = "psis"
    IS = "is"
    DELTA1_WAIC_M = "delta1_waic_m"
    DELTA1_WAIC = "delta1_waic"
    DELTA2_WAIC = "delta2_waic"
    EXACT = "exact"
    ZERO = "zero"

    @property
    def needs_model(self) -> bool:
        """True when the surrogate needs the dataset and draws, not just the log-likelihood."""
        return self in (SurrogateName.PLPD,) or self.value.startswith("delta")


_DELTA_ORDERS = {
    SurrogateName.DELTA1_WAIC_M: DeltaOrder.FIRST_MARGINAL,
    SurrogateName.DELTA1_WAIC: DeltaOrder.FIRST,
    SurrogateName.DELTA2_WAIC: DeltaOrder.SECOND,
}


def compute_surrogate(
    name: str,
    loglik: LogLikMatrix,
    draws_used: Optional[int] = None,
    dataset: Optional[BlrDataset] = None,
    draws: Optional[np.ndarray] = None,
    exact: Optional[np.ndarray] = None,
) -> SurrogateVector:
    """
    Build the named surrogate for one model.

    ``plpd`` and the ``delta*`` surrogates evaluate the Gaussian regression
    model in the (beta, log sigma) parameterization at the posterior mean of
    ``draws``. ``exact`` wraps the given exact values.

    Args:
        name: Surrogate name, see ``SurrogateName``.
        loglik: Pointwise log-likelihood matrix.
        draws_used: Leading draws used by waic, tis, psis, delta1_waic and delta2_waic.
        dataset: Regression dataset, for plpd and delta surrogates.
        draws: Posterior draw matrix, for plpd and delta surrogates.
        exact: Exact LOO values for every observation, for ``exact``.

    Returns:
        SurrogateVector with n entries.

    Raises:
        InputValidationError: If the name is unknown or a required input is missing.
    """
    try:
        surrogate_name = SurrogateName(name)
    except ValueError:
        choices = ", ".join(s.value for s in SurrogateName)
        raise InputValidationError(f"Unknown surrogate '{name}'; choose one of {choices}")

    if surrogate_name.needs_model:
        if dataset is None or draws is None:
            raise InputValidationError(f"Surrogate '{name}' needs both a dataset and a draws file")
        if dataset.n != loglik.obs_count:
            raise InputValidationError(
                f"Dataset has {dataset.n} observations, log-likelihood has {loglik.obs_count}"
            )

    logger.info(f"Computing surrogate {surrogate_name.value} over {loglik!r}")
    if surrogate_name == SurrogateName.ZERO:
        return zero_surrogate(loglik.obs_count)
    if surrogate_name == SurrogateName.EXACT:
        if exact is None:
            raise InputValidationError("Surrogate 'exact' needs an exact LOO file")
        exact = np.asarray(exact, dtype=float)
        if exact.shape != (loglik.obs_count,):
            raise InputValidationError(
                f"Exact values have shape {exact.shape}, expected ({loglik.obs_count},)"
            )
        return exact_surrogate(exact)
    if surrogate_name == SurrogateName.WAIC:
        return waic_surrogate(loglik, draws_used)
    if surrogate_name == SurrogateName.TIS:
        return tis_surrogate(loglik, draws_used)
    if surrogate_name == SurrogateName.IS:
        return importance_loo(loglik)
    if surrogate_name == SurrogateName.PSIS:
        if draws_used is not None and draws_used != loglik.draw_count:
            loglik = LogLikMatrix(loglik.head(draws_used), obs_ids=loglik.obs_ids)
        return psis_surrogate(loglik)

    summary = summarize_draws(draws)
    if surrogate_name == SurrogateName.PLPD:
        return plpd_surrogate(point_loglik(dataset, summary.mean))
    order = _DELTA_ORDERS[surrogate_name]
    derivs = per_obs_derivatives(dataset, summary.mean, with_hessians=order == DeltaOrder.SECOND)
    if order == DeltaOrder.FIRST_MARGINAL:
        point_values = point_loglik(dataset, summary.mean)
        return delta_waic_surrogate(loglik, derivs, summary, order, point_values=point_values)
    return delta_waic_surrogate(loglik, derivs, summary, order, draws_used)


def exact_at_sample(
    plan: SubsamplePlan,
    loglik: Optional[LogLikMatrix] = None,
    exact: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Exact LOO values at the plan's indices, in plan order.

    Taken from ``exact`` when given, otherwise computed by PSIS over all draws
    for the sampled columns only.

    Returns:
        Tuple (values, pareto_k); pareto_k is None when ``exact`` was given.
    """
    if exact is not None:
        exact = np.asarray(exact, dtype=float)
        if exact.shape != (plan.n,):
            raise InputValidationError(f"Exact values have shape {exact.shape}, expected ({plan.n},)")
        return exact[plan.indices], None
    if loglik is None:
        raise InputValidationError("Need either exact LOO values or a log-likelihood matrix")
    if loglik.obs_count != plan.n:
        raise InputValidationError(
            f"Log-likelihood has {loglik.obs_count} observations, plan population is {plan.n}"
        )
    return psis_loo_columns(loglik, plan.indices)
