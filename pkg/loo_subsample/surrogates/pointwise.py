"""Point, WAIC and Taylor-expansion approximations of the LOO log predictive density."""

import logging
from enum import Enum
from typing import Optional, Union

import numpy as np

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError
from loo_subsample.numerics.core import log_mean_exp, sample_variance
from loo_subsample.surrogates.types import (
    GaussianPosteriorSummary,
    LogLikMatrix,
    PerObsDerivatives,
    SurrogateMethod,
    SurrogateVector,
)

logger = logging.getLogger(__name__)


class DeltaOrder(str, Enum):
    """Which terms of the Taylor approximation of p_eff to keep."""
    FIRST_MARGINAL = "1m"
    FIRST = "1"
    SECOND = "2"


DELTA_METHODS = {
    DeltaOrder.FIRST_MARGINAL: SurrogateMethod.DELTA1_WAIC_M,
    DeltaOrder.FIRST: SurrogateMethod.DELTA1_WAIC,
    DeltaOrder.SECOND: SurrogateMethod.DELTA2_WAIC,
}


def lpd(loglik: LogLikMatrix) -> np.ndarray:
    """Full-data log predictive density log p(y_i | y) for every observation."""
    return log_mean_exp(loglik.values, axis=0)


def plpd_surrogate(loglik_at_point: np.ndarray) -> SurrogateVector:
    """
    Wrap log p(y_i | theta-hat) as a surrogate.

    Args:
        loglik_at_point: Length-n log-likelihood evaluated at one point estimate.

    Returns:
        SurrogateVector with method ``plpd`` and a single draw used.

    Raises:
        InputValidationError: If any entry is non-finite.
    """
    values = np.asarray(loglik_at_point, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InputValidationError(f"Point log-likelihood must be a non-empty vector, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise InputValidationError("Point log-likelihood contains non-finite entries")
    return SurrogateVector(values=values, method=SurrogateMethod.PLPD, draws_used=1)


def zero_surrogate(obs_count: int) -> SurrogateVector:
    """All-zero surrogate; the difference estimator then reduces to the SRS expansion estimator."""
    if obs_count < 1:
        raise InputValidationError(f"Observation count must be positive, got {obs_count}")
    return SurrogateVector(values=np.zeros(obs_count), method=SurrogateMethod.ZERO, draws_used=0)


def exact_surrogate(exact_values: np.ndarray, draws_used: int = 0) -> SurrogateVector:
    """Use already computed LOO values as their own surrogate."""
    return SurrogateVector(values=exact_values, method=SurrogateMethod.EXACT, draws_used=draws_used)


def waic_surrogate(loglik: LogLikMatrix, draws_used: Optional[int] = None) -> SurrogateVector:
    """
    WAIC approximation lpd_i - V_s(log p(y_i | theta_s)) from the first ``draws_used`` draws.

    Args:
        loglik: Pointwise log-likelihood matrix.
        draws_used: Number of leading draws to use; defaults to all of them.

    Returns:
        SurrogateVector with method ``waic_S``.

    Raises:
        NumericalDegeneracyError: If fewer than two draws are requested.
    """
    if draws_used is None:
        draws_used = loglik.draw_count
    if draws_used < 2:
        raise NumericalDegeneracyError(
            f"WAIC needs at least 2 draws for the log-likelihood variance, got {draws_used}"
        )
    rows = loglik.head(draws_used)
    p_eff = sample_variance(rows, axis=0)
    values = log_mean_exp(rows, axis=0) - p_eff
    logger.debug(f"WAIC surrogate over {draws_used} draws, total p_eff {np.sum(p_eff):.4f}")
    return SurrogateVector(values=values, method=SurrogateMethod.WAIC, draws_used=draws_used)


def _check_delta_inputs(
    gradients: np.ndarray,
    hessians: Optional[np.ndarray],
    posterior: GaussianPosteriorSummary,
    order: DeltaOrder,
) -> None:
    if gradients.shape[-1] != posterior.dim:
        raise InputValidationError(
            f"Gradient dimension {gradients.shape[-1]} does not match posterior dimension {posterior.dim}"
        )
    if order == DeltaOrder.SECOND:
        if hessians is None:
            raise InputValidationError("Second-order p_eff approximation needs Hessians")
        if hessians.shape[-2:] != (posterior.dim, posterior.dim):
            raise InputValidationError(
                f"Hessian shape {hessians.shape} does not match posterior dimension {posterior.dim}"
            )
    posterior.require_psd()


def _delta_peff_rows(
    gradients: np.ndarray,
    hessians: Optional[np.ndarray],
    covariance: np.ndarray,
    order: DeltaOrder,
) -> np.ndarray:
    if order == DeltaOrder.FIRST_MARGINAL:
        peff = (gradients ** 2) @ np.diag(covariance)
    else:
        peff = np.sum((gradients @ covariance) * gradients, axis=1)
        if order == DeltaOrder.SECOND:
            # tr(H S H S) as a Frobenius contraction of H S with its transpose
            hs = hessians @ covariance
            peff = peff + 0.5 * np.einsum("nij,nji->n", hs, hs)
    return np.maximum(peff, 0.0)


def delta_peff(
    grad_i: np.ndarray,
    hessian_i: Optional[np.ndarray],
    posterior: GaussianPosteriorSummary,
    order: Union[DeltaOrder, str],
) -> float:
    """
    Taylor approximation of the posterior variance of log p(y_i | theta).

    ``1m`` keeps the gradient term with marginal variances only, ``1`` the full
    gradient quadratic form, ``2`` adds half of tr(H Sigma H Sigma).

    Args:
        grad_i: Gradient of log p(y_i | theta) at theta-hat, length P.
        hessian_i: Hessian at theta-hat (P x P); required for order 2.
        posterior: Posterior mean and covariance of theta.
        order: One of ``1m``, ``1``, ``2``.

    Returns:
        The non-negative approximate p_eff contribution.

    Raises:
        InputValidationError: On dimension mismatch or a missing Hessian.
        NumericalDegeneracyError: If the covariance is not PSD.
    """
    order = DeltaOrder(order)
    gradient = np.atleast_2d(np.asarray(grad_i, dtype=float))
    hessians = None if hessian_i is None else np.asarray(hessian_i, dtype=float)[np.newaxis]
    _check_delta_inputs(gradient, hessians, posterior, order)
    return float(_delta_peff_rows(gradient, hessians, posterior.covariance, order)[0])


def delta_waic_surrogate(
    loglik: LogLikMatrix,
    derivs: PerObsDerivatives,
    posterior: GaussianPosteriorSummary,
    order: Union[DeltaOrder, str],
    draws_used: Optional[int] = None,
    point_values: Optional[np.ndarray] = None,
) -> SurrogateVector:
    """
    lpd_i minus the Taylor p_eff approximation, for every observation.

    Order ``1m`` takes its lpd term from ``point_values``, the log-likelihood
    at theta-hat, and never reads the draw matrix. Orders ``1`` and ``2`` use
    lpd over the leading ``draws_used`` draws.

    Args:
        loglik: Pointwise log-likelihood matrix, used for lpd.
        derivs: Gradients (and Hessians for order 2) at theta-hat.
        posterior: Posterior mean and covariance of theta.
        order: One of ``1m``, ``1``, ``2``.
        draws_used: Leading draws used for lpd; defaults to all.
        point_values: Length-n log p(y_i | theta-hat); required for order ``1m``.

    Returns:
        SurrogateVector tagged ``delta1_waic_m``, ``delta1_waic`` or ``delta2_waic``.

    Raises:
        InputValidationError: On mismatched observation counts or missing point values.
    """
    order = DeltaOrder(order)
    if derivs.obs_count != loglik.obs_count:
        raise InputValidationError(
            f"Derivatives cover {derivs.obs_count} observations, log-likelihood has {loglik.obs_count}"
        )
    hessians = derivs.hessians if order == DeltaOrder.SECOND else None
    _check_delta_inputs(derivs.gradients, hessians, posterior, order)
    peff = _delta_peff_rows(derivs.gradients, hessians, posterior.covariance, order)
    if order == DeltaOrder.FIRST_MARGINAL:
        if point_values is None:
            raise InputValidationError("Marginal first-order delta-WAIC needs the log-likelihood at theta-hat")
        base = plpd_surrogate(point_values).values
        if base.shape != (loglik.obs_count,):
            raise InputValidationError(
                f"Point log-likelihood has shape {base.shape}, expected ({loglik.obs_count},)"
            )
        draws_used = 1
    else:
        if draws_used is None:
            draws_used = loglik.draw_count
        base = log_mean_exp(loglik.head(draws_used), axis=0)
    values = base - peff
    logger.debug(f"Delta-WAIC order {order.value}: total p_eff {np.sum(peff):.4f}")
    return SurrogateVector(values=values, method=DELTA_METHODS[order], draws_used=draws_used)
