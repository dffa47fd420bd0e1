"""Logistic regression with a Laplace posterior approximation and a refit LOO oracle."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import stats
from scipy.special import expit, logsumexp

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError
from loo_subsample.surrogates.types import GaussianPosteriorSummary, LogLikMatrix, PerObsDerivatives
from loo_subsample.utils.rng import StreamPurpose, make_generator

logger = logging.getLogger(__name__)

MAX_REFIT_OBSERVATIONS = 500
DIVERGENCE_NORM = 1e3
SEPARATION_PROBABILITY = 1e-8
SEPARATION_PRIOR_SDS = 3.0
QUADRATURE_NODES = 64


@dataclass(frozen=True, eq=False)
class LogisticDataset:
    """Design matrix (first column is the intercept) and 0/1 responses."""
    design: np.ndarray
    response: np.ndarray
    true_beta: Optional[np.ndarray] = None

    def __post_init__(self):
        design = np.array(self.design, dtype=float)
        response = np.array(self.response, dtype=float)
        if design.ndim != 2 or response.shape != (design.shape[0],):
            raise InputValidationError(f"Design {design.shape} and response {response.shape} are not aligned")
        if not np.all(np.isfinite(design)):
            raise InputValidationError("Design contains non-finite entries")
        if not np.all((response == 0) | (response == 1)):
            raise InputValidationError("Logistic responses must be 0 or 1")
        design.setflags(write=False)
        response.setflags(write=False)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    def without(self, index: int) -> "LogisticDataset":
        keep = np.arange(self.n) != index
        return LogisticDataset(design=self.design[keep], response=self.response[keep])


def simulate_logistic(n: int, p: int, seed: int, coef: float = 1.0) -> LogisticDataset:
    """
    Simulate logistic data with an intercept and p - 1 standard-normal covariates.

    The intercept is 0 and every slope equals ``coef / sqrt(p - 1)``, so the
    linear predictor has variance coef^2.
    """
    if p < 1 or n < p + 1:
        raise InputValidationError(f"Need p >= 1 and n > p, got n={n}, p={p}")
    rng = make_generator(seed, StreamPurpose.SIMULATE)
    covariates = rng.standard_normal((n, p - 1))
    design = np.column_stack([np.ones(n), covariates])
    beta = np.zeros(p)
    if p > 1:
        beta[1:] = coef / math.sqrt(p - 1)
    response = (rng.random(n) < expit(design @ beta)).astype(float)
    return LogisticDataset(design=design, response=response, true_beta=beta)


def _log_prior(theta: np.ndarray, prior_sd: float) -> np.ndarray:
    return np.sum(stats.norm.logpdf(np.atleast_2d(theta), scale=prior_sd), axis=1)


def _loglik_eta(response: np.ndarray, eta: np.ndarray) -> np.ndarray:
    return response * eta - np.logaddexp(0.0, eta)


def _warn_if_near_separation(theta: np.ndarray, prob: np.ndarray, prior_sd: float) -> None:
    edge = float(np.min(np.minimum(prob, 1.0 - prob)))
    largest = float(np.max(np.abs(theta)))
    if edge < SEPARATION_PROBABILITY or largest > SEPARATION_PRIOR_SDS * prior_sd:
        logger.warning(
            f"Logistic fit is close to separation: smallest fitted tail probability {edge:.2e}, "
            f"largest |coefficient| {largest:.3g} with prior sd {prior_sd:g}"
        )


def logistic_laplace(
    data: LogisticDataset,
    prior_sd: float = 2.5,
    max_iter: int = 100,
    tol: float = 1e-8,
    start: Optional[np.ndarray] = None,
) -> GaussianPosteriorSummary:
    """
    Laplace approximation of the posterior under independent N(0, prior_sd^2) priors.

    Newton iterations run until the largest absolute gradient of the log
    posterior is below ``tol``; the covariance is the inverse negative Hessian
    at the mode. A mode with fitted probabilities within 1e-8 of 0 or 1, or a
    coefficient beyond three prior standard deviations, is logged as a warning.

    Args:
        data: Logistic dataset.
        prior_sd: Prior standard deviation of every coefficient.
        max_iter: Iteration limit.
        tol: Gradient tolerance.
        start: Optional starting point.

    Returns:
        GaussianPosteriorSummary at the mode.

    Raises:
        NumericalDegeneracyError: If the iterates diverge (separation) or do not converge.
    """
    if prior_sd <= 0:
        raise InputValidationError(f"prior_sd must be positive, got {prior_sd}")
    x, y = data.design, data.response
    theta = np.zeros(data.p) if start is None else np.array(start, dtype=float)
    prior_precision = np.eye(data.p) / prior_sd ** 2
    grad_norm = float("inf")
    for iteration in range(max_iter + 1):
        prob = expit(x @ theta)
        gradient = x.T @ (y - prob) - theta / prior_sd ** 2
        neg_hessian = (x * (prob * (1.0 - prob))[:, np.newaxis]).T @ x + prior_precision
        grad_norm = float(np.max(np.abs(gradient)))
        logger.debug(f"Newton iteration {iteration}: max|grad|={grad_norm:.3e}")
        if grad_norm < tol:
            _warn_if_near_separation(theta, prob, prior_sd)
            covariance = np.linalg.inv(neg_hessian)
            return GaussianPosteriorSummary(mean=theta, covariance=0.5 * (covariance + covariance.T))
        if iteration == max_iter:
            break
        theta = theta + np.linalg.solve(neg_hessian, gradient)
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > DIVERGENCE_NORM:
            raise NumericalDegeneracyError(
                f"Newton iterates diverged at iteration {iteration} (|theta|={np.linalg.norm(theta):.3g}); "
                f"the data may be separable"
            )
    raise NumericalDegeneracyError(
        f"Laplace fit did not converge in {max_iter} iterations (max|grad|={grad_norm:.3e})"
    )


def logistic_loglik_matrix(data: LogisticDataset, draws: np.ndarray) -> LogLikMatrix:
    """Bernoulli log-likelihood of every observation at every draw."""
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if draws.shape[1] != data.p:
        raise InputValidationError(f"Draws need {data.p} columns, got {draws.shape[1]}")
    return LogLikMatrix(_loglik_eta(data.response[np.newaxis, :], draws @ data.design.T))


def logistic_point_loglik(data: LogisticDataset, theta: np.ndarray) -> np.ndarray:
    return _loglik_eta(data.response, data.design @ np.asarray(theta, dtype=float))


def logistic_log_correction(
    data: LogisticDataset,
    draws: np.ndarray,
    summary: GaussianPosteriorSummary,
    prior_sd: float = 2.5,
) -> np.ndarray:
    """
    log p(theta_s | y) - log q(theta_s) up to a constant for draws from the Laplace approximation q.

    Passed as ``log_correction`` to the importance-sampling surrogates.
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    log_joint = logistic_loglik_matrix(data, draws).values.sum(axis=1) + _log_prior(draws, prior_sd)
    log_q = stats.multivariate_normal.logpdf(draws, mean=summary.mean, cov=summary.covariance)
    return log_joint - np.atleast_1d(log_q)


def logistic_derivatives(data: LogisticDataset, theta: np.ndarray, with_hessians: bool = False) -> PerObsDerivatives:
    """Per-observation gradients (y - p) x and Hessians -p (1 - p) x x'."""
    x = data.design
    prob = expit(x @ np.asarray(theta, dtype=float))
    gradients = (data.response - prob)[:, np.newaxis] * x
    hessians = None
    if with_hessians:
        hessians = -(prob * (1.0 - prob))[:, np.newaxis, np.newaxis] * np.einsum("ni,nj->nij", x, x)
    return PerObsDerivatives(gradients=gradients, hessians=hessians)


def _predictive_log_density(y: float, x: np.ndarray, summary: GaussianPosteriorSummary,
                            nodes: np.ndarray, log_weights: np.ndarray) -> float:
    # eta = x' theta is Gaussian under the Laplace posterior
    loc = float(x @ summary.mean)
    scale = math.sqrt(max(float(x @ summary.covariance @ x), 0.0))
    return float(logsumexp(log_weights + _loglik_eta(y, loc + scale * nodes)))


def logistic_refit_loo(data: LogisticDataset, prior_sd: float = 2.5, threads: int = 1) -> np.ndarray:
    """
    LOO oracle by refitting the Laplace approximation without each observation.

    The held-out predictive density integrates the Bernoulli likelihood over the
    refitted Gaussian with Gauss-Hermite quadrature on the linear predictor.

    Raises:
        InputValidationError: If n exceeds 500.
    """
    if data.n > MAX_REFIT_OBSERVATIONS:
        raise InputValidationError(
            f"Refit oracle is limited to n <= {MAX_REFIT_OBSERVATIONS}, got n={data.n}"
        )
    full = logistic_laplace(data, prior_sd=prior_sd)
    nodes, weights = hermegauss(QUADRATURE_NODES)
    log_weights = np.log(weights) - 0.5 * math.log(2.0 * math.pi)

    def held_out(index: int) -> float:
        refit = logistic_laplace(data.without(index), prior_sd=prior_sd, start=full.mean)
        return _predictive_log_density(data.response[index], data.design[index], refit, nodes, log_weights)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        values = list(pool.map(held_out, range(data.n)))
    return np.asarray(values)
