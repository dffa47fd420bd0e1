"""Importance-sampling LOO: plain, truncated (TIS) and Pareto-smoothed (PSIS).

For observation i the raw log ratio of draw s is ``-log p(y_i | theta_s)``,
optionally plus ``log p(theta_s | y) - log q(theta_s | y)`` when the draws come
from an approximation q of the posterior.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from loo_subsample.errors import InputValidationError
from loo_subsample.numerics.core import log_mean_exp, self_normalized_log_expectation
from loo_subsample.surrogates.types import LogLikMatrix, SurrogateMethod, SurrogateVector

logger = logging.getLogger(__name__)

MIN_PSIS_DRAWS = 25
MIN_TAIL_LENGTH = 5
PARETO_K_THRESHOLD = 0.7

# Empirical Bayes settings of the profile fit: quadrature grid size offset,
# prior for the b parameter and weakly informative prior on k.
_GRID_OFFSET = 30
_PRIOR_BS = 3
_PRIOR_K_COUNT = 10
_PRIOR_K_VALUE = 0.5


def psis_tail_length(draws: int) -> int:
    """Number of largest ratios replaced by the fitted tail, min(ceil(0.2 S), ceil(3 sqrt(S)))."""
    return int(min(math.ceil(0.2 * draws), math.ceil(3.0 * math.sqrt(draws))))


def gpd_fit_tail(tail: np.ndarray) -> Tuple[float, float]:
    """
    Fit a generalized Pareto distribution to tail exceedances.

    Uses the profile-likelihood method that integrates over the grid of the
    b = -k / sigma parameter, with a weakly informative prior pulling k
    towards 0.5. Deterministic for a given input.

    Args:
        tail: Non-negative exceedances over the tail threshold, sorted ascending,
            at least 5 values.

    Returns:
        Tuple (k_hat, sigma_hat). A tail with all values equal returns
        ``(-inf, 0.0)``, meaning no smoothing is needed.

    Raises:
        InputValidationError: If the tail is too short, unsorted or negative.
    """
    ary = np.asarray(tail, dtype=float)
    n = ary.shape[0]
    if ary.ndim != 1 or n < MIN_TAIL_LENGTH:
        raise InputValidationError(f"GPD fit needs at least {MIN_TAIL_LENGTH} tail values, got {n}")
    if not np.all(np.isfinite(ary)) or ary[0] < 0:
        raise InputValidationError("GPD tail must be finite non-negative exceedances")
    if np.any(np.diff(ary) < 0):
        raise InputValidationError("GPD tail must be sorted ascending")
    if ary[-1] == ary[0]:
        return float("-inf"), 0.0

    grid_size = _GRID_OFFSET + int(n ** 0.5)
    quartile = ary[int(n / 4 + 0.5) - 1]
    if quartile <= 0:
        quartile = ary[ary > 0][0]
    b_ary = 1 - np.sqrt(grid_size / (np.arange(1, grid_size + 1, dtype=float) - 0.5))
    b_ary /= _PRIOR_BS * quartile
    b_ary += 1 / ary[-1]

    k_ary = np.log1p(-b_ary[:, None] * ary).mean(axis=1)
    len_scale = n * (np.log(-(b_ary / k_ary)) - k_ary - 1)
    weights = 1 / np.exp(len_scale - len_scale[:, None]).sum(axis=1)

    # drop negligible weights
    keep = weights >= 10 * np.finfo(float).eps
    weights = weights[keep] / weights[keep].sum()
    b_post = np.sum(b_ary[keep] * weights)

    k_post = np.log1p(-b_post * ary).mean()
    sigma = -k_post / b_post
    k_post = (n * k_post + _PRIOR_K_COUNT * _PRIOR_K_VALUE) / (n + _PRIOR_K_COUNT)
    return float(k_post), float(sigma)


def gpd_quantile(probs: np.ndarray, k: float, sigma: float) -> np.ndarray:
    """Inverse CDF of the zero-location generalized Pareto distribution."""
    probs = np.asarray(probs, dtype=float)
    if abs(k) < np.finfo(float).eps:
        return -sigma * np.log1p(-probs)
    return sigma * np.expm1(-k * np.log1p(-probs)) / k


def pareto_smooth_log_ratios(log_ratios: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Replace the largest ratios with expected order statistics of a fitted GPD.

    Args:
        log_ratios: Raw log importance ratios for one observation, length S >= 25.

    Returns:
        Tuple (smoothed log ratios shifted so the raw maximum is 0, k_hat).
        Smoothed values are capped at the raw maximum.
    """
    x = np.array(log_ratios, dtype=float)
    draws = x.shape[0]
    tail_length = psis_tail_length(draws)
    x -= np.max(x)
    order = np.argsort(x, kind="stable")
    tail_idx = order[-tail_length:]
    cutoff = x[order[-tail_length - 1]]
    exp_cutoff = np.exp(cutoff)
    exceedances = np.maximum(np.exp(x[tail_idx]) - exp_cutoff, 0.0)

    k_hat, sigma = gpd_fit_tail(exceedances)
    if np.isfinite(k_hat) and sigma > 0:
        probs = (np.arange(tail_length) + 0.5) / tail_length
        smoothed = np.log(gpd_quantile(probs, k_hat, sigma) + exp_cutoff)
        x[tail_idx] = np.minimum(smoothed, 0.0)
    return x, k_hat


def _log_ratio_correction(log_correction: Optional[np.ndarray], draws: int) -> np.ndarray:
    if log_correction is None:
        return np.zeros(draws)
    correction = np.asarray(log_correction, dtype=float)
    if correction.ndim != 1:
        raise InputValidationError("Log posterior correction must be a vector")
    if not np.all(np.isfinite(correction)):
        raise InputValidationError("Log posterior correction contains non-finite entries")
    return correction


def psis_loo_columns(
    loglik: LogLikMatrix,
    columns: Sequence[int],
    log_correction: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    PSIS-LOO values for a subset of observations, over all draws.

    Args:
        loglik: Pointwise log-likelihood matrix with at least 25 draws.
        columns: Observation indices to evaluate.
        log_correction: Optional length-S log p(theta|y) - log q(theta|y).

    Returns:
        Tuple (values, pareto_k) aligned with ``columns``.

    Raises:
        InputValidationError: If there are fewer than 25 draws.
    """
    draws = loglik.draw_count
    if draws < MIN_PSIS_DRAWS:
        raise InputValidationError(
            f"PSIS needs at least {MIN_PSIS_DRAWS} draws for the tail fit, got {draws}; "
            f"use the tis surrogate instead"
        )
    correction = _log_ratio_correction(log_correction, draws)
    if correction.shape[0] != draws:
        raise InputValidationError(
            f"Log posterior correction has length {correction.shape[0]}, expected {draws}"
        )
    columns = np.asarray(columns, dtype=int)
    values = np.empty(columns.shape[0])
    pareto_k = np.empty(columns.shape[0])
    matrix = loglik.values
    for pos, col in enumerate(columns):
        column = matrix[:, col]
        smoothed, pareto_k[pos] = pareto_smooth_log_ratios(correction - column)
        values[pos] = self_normalized_log_expectation(column, smoothed)

    bad = int(np.sum(pareto_k > PARETO_K_THRESHOLD))
    if bad:
        logger.warning(
            f"{bad} of {columns.shape[0]} observations have Pareto k above {PARETO_K_THRESHOLD}; "
            f"their LOO estimates may be unreliable"
        )
    return values, pareto_k


def psis_surrogate(loglik: LogLikMatrix, log_correction: Optional[np.ndarray] = None) -> SurrogateVector:
    """PSIS-LOO for every observation, with per-observation Pareto k in the diagnostics."""
    values, pareto_k = psis_loo_columns(loglik, np.arange(loglik.obs_count), log_correction)
    return SurrogateVector(
        values=values,
        method=SurrogateMethod.PSIS,
        draws_used=loglik.draw_count,
        diagnostics=pareto_k,
    )


def tis_surrogate(
    loglik: LogLikMatrix,
    draws_used: Optional[int] = None,
    log_correction: Optional[np.ndarray] = None,
    truncate: bool = True,
) -> SurrogateVector:
    """
    Truncated importance sampling LOO from the first ``draws_used`` draws.

    Ratios are truncated at tau = mean(r) * sqrt(S), computed in the log domain
    as log_mean_exp(log r) + log(S) / 2.

    Args:
        loglik: Pointwise log-likelihood matrix.
        draws_used: Number of leading draws; defaults to all.
        log_correction: Optional length-S log p(theta|y) - log q(theta|y).
        truncate: When False the plain self-normalized estimate is returned.

    Returns:
        SurrogateVector tagged ``tis_S`` (``is`` when truncation is disabled).
    """
    if draws_used is None:
        draws_used = loglik.draw_count
    rows = loglik.head(draws_used)
    correction = _log_ratio_correction(log_correction, loglik.draw_count)
    if correction.shape[0] != loglik.draw_count:
        raise InputValidationError(
            f"Log posterior correction has length {correction.shape[0]}, expected {loglik.draw_count}"
        )
    log_r = correction[:draws_used, np.newaxis] - rows
    if truncate:
        log_tau = log_mean_exp(log_r, axis=0) + 0.5 * np.log(draws_used)
        log_r = np.minimum(log_r, log_tau[np.newaxis, :])
    values = self_normalized_log_expectation(rows, log_r, axis=0)
    method = SurrogateMethod.TIS if truncate else SurrogateMethod.IS
    return SurrogateVector(values=values, method=method, draws_used=draws_used)


def importance_loo(loglik: LogLikMatrix, log_correction: Optional[np.ndarray] = None) -> SurrogateVector:
    """Plain self-normalized importance sampling LOO over all draws."""
    return tis_surrogate(loglik, log_correction=log_correction, truncate=False)
