"""Conjugate Bayesian linear regression with exact leave-one-out predictive densities.

The likelihood is y_i ~ N(x_i' beta, sigma^2). Under the normal-inverse-gamma prior
beta | sigma^2 ~ N(m0, sigma^2 V0), sigma^2 ~ IG(a0, b0) the posterior is available
in closed form and the LOO predictive of y_i is a Student-t obtained from a
rank-one downdate of the full-data posterior.

Draw matrices store theta = (beta_0, ..., beta_{P-1}, log sigma), one row per draw.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError
from loo_subsample.surrogates.types import GaussianPosteriorSummary, LogLikMatrix, PerObsDerivatives
from loo_subsample.utils.rng import StreamPurpose, make_generator

logger = logging.getLogger(__name__)

# leverage this close to 1 means deleting the observation leaves the design rank deficient
LEVERAGE_LIMIT = 1.0 - 1e-10


@dataclass(frozen=True, eq=False)
class BlrDataset:
    """Design matrix X (n x P) and response y, with the simulation truth when known."""
    design: np.ndarray
    response: np.ndarray
    true_beta: Optional[np.ndarray] = None
    noise_sd: Optional[float] = None
    target_r2: Optional[float] = None

    def __post_init__(self):
        design = np.array(self.design, dtype=float)
        response = np.array(self.response, dtype=float)
        if design.ndim != 2 or response.ndim != 1 or design.shape[0] != response.shape[0]:
            raise InputValidationError(
                f"Design {design.shape} and response {response.shape} are not aligned"
            )
        if design.shape[0] < 1 or design.shape[1] < 1:
            raise InputValidationError(f"Dataset must have observations and covariates, got {design.shape}")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise InputValidationError("Dataset contains non-finite entries")
        design.setflags(write=False)
        response.setflags(write=False)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        if self.true_beta is not None:
            beta = np.array(self.true_beta, dtype=float)
            if beta.shape != (design.shape[1],):
                raise InputValidationError(f"true_beta must have length {design.shape[1]}")
            object.__setattr__(self, "true_beta", beta)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]


@dataclass(frozen=True, eq=False)
class NormalInverseGammaPrior:
    """beta | sigma^2 ~ N(mean, sigma^2 * cov_scale), sigma^2 ~ InvGamma(shape, rate)."""
    mean: np.ndarray
    cov_scale: np.ndarray
    shape: float
    rate: float

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov_scale = np.array(self.cov_scale, dtype=float)
        if mean.ndim != 1 or cov_scale.shape != (mean.shape[0], mean.shape[0]):
            raise InputValidationError("Prior mean and covariance scale have inconsistent shapes")
        if self.shape <= 0 or self.rate <= 0:
            raise InputValidationError(f"Inverse-gamma shape and rate must be positive, got {self.shape}, {self.rate}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov_scale", cov_scale)

    @classmethod
    def isotropic(cls, p: int, scale: float = 10.0, shape: float = 2.0, rate: float = 1.0) -> "NormalInverseGammaPrior":
        """Zero-mean prior with cov_scale = scale^2 * I."""
        if scale <= 0:
            raise InputValidationError(f"Prior scale must be positive, got {scale}")
        return cls(mean=np.zeros(p), cov_scale=scale ** 2 * np.eye(p), shape=shape, rate=rate)

    @property
    def precision(self) -> np.ndarray:
        return np.linalg.inv(self.cov_scale)


@dataclass(frozen=True, eq=False)
class ConjugateBlrPosterior:
    """Normal-inverse-gamma posterior with the same parameterization as the prior."""
    mean: np.ndarray
    cov_scale: np.ndarray
    shape: float
    rate: float

    @property
    def p(self) -> int:
        return self.mean.shape[0]

    @property
    def coefficient_covariance(self) -> np.ndarray:
        """Marginal posterior covariance of beta, rate / (shape - 1) * cov_scale."""
        if self.shape <= 1:
            raise NumericalDegeneracyError(f"Posterior shape {self.shape} <= 1 has no finite covariance")
        return self.rate / (self.shape - 1.0) * self.cov_scale


def simulate_blr(n: int, p: int, target_r2: float, sparse: bool, seed: int) -> BlrDataset:
    """
    Simulate a linear regression dataset with a given population R^2.

    Covariates are independent standard normal and there is no intercept. Dense
    mode uses beta = 1 for every covariate, sparse mode a single nonzero
    coefficient on the first covariate. The noise variance is
    ||beta||^2 (1 - R^2) / R^2.

    Args:
        n: Number of observations, at least p + 2.
        p: Number of covariates.
        target_r2: Population R^2 in (0, 1).
        sparse: Use a single nonzero coefficient.
        seed: 64-bit seed.

    Returns:
        BlrDataset with the simulation truth attached.

    Raises:
        InputValidationError: If target_r2 is outside (0, 1) or n < p + 2.
    """
    if not 0.0 < target_r2 < 1.0:
        raise InputValidationError(f"target_r2 must lie in (0, 1), got {target_r2}")
    if p < 1 or n < p + 2:
        raise InputValidationError(f"Need p >= 1 and n >= p + 2, got n={n}, p={p}")
    rng = make_generator(seed, StreamPurpose.SIMULATE)
    design = rng.standard_normal((n, p))
    if sparse:
        beta = np.zeros(p)
        beta[0] = 1.0
    else:
        beta = np.ones(p)
    noise_sd = math.sqrt(float(beta @ beta) * (1.0 - target_r2) / target_r2)
    response = design @ beta + noise_sd * rng.standard_normal(n)
    logger.info(f"Simulated BLR dataset n={n} p={p} R2={target_r2} sparse={sparse} noise_sd={noise_sd:.4f}")
    return BlrDataset(design=design, response=response, true_beta=beta, noise_sd=noise_sd, target_r2=target_r2)


def drop_covariates(data: BlrDataset, count: int) -> BlrDataset:
    """Return the nested dataset that omits the last ``count`` covariates."""
    if count < 1 or count >= data.p:
        raise InputValidationError(f"Can drop between 1 and {data.p - 1} covariates, got {count}")
    keep = data.p - count
    beta = None if data.true_beta is None else data.true_beta[:keep]
    return BlrDataset(
        design=data.design[:, :keep],
        response=data.response,
        true_beta=beta,
        noise_sd=data.noise_sd,
        target_r2=data.target_r2,
    )


def _check_rank(design: np.ndarray) -> None:
    rank = np.linalg.matrix_rank(design)
    if rank < design.shape[1]:
        raise NumericalDegeneracyError(
            f"Design matrix has rank {rank} < {design.shape[1]} covariates"
        )


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def fit_conjugate_blr(data: BlrDataset, prior: Optional[NormalInverseGammaPrior] = None) -> ConjugateBlrPosterior:
    """
    Exact normal-inverse-gamma posterior update.

    Args:
        data: Dataset with a full column rank design.
        prior: Prior; defaults to ``NormalInverseGammaPrior.isotropic(P)``.

    Returns:
        ConjugateBlrPosterior.

    Raises:
        NumericalDegeneracyError: If the design is rank deficient.
    """
    if prior is None:
        prior = NormalInverseGammaPrior.isotropic(data.p)
    if prior.mean.shape[0] != data.p:
        raise InputValidationError(f"Prior dimension {prior.mean.shape[0]} does not match P={data.p}")
    _check_rank(data.design)
    x, y = data.design, data.response
    prior_precision = prior.precision
    precision = prior_precision + x.T @ x
    cov_scale = _symmetrize(np.linalg.inv(precision))
    mean = cov_scale @ (prior_precision @ prior.mean + x.T @ y)
    shape = prior.shape + 0.5 * data.n
    rate = prior.rate + 0.5 * (
        float(y @ y) + float(prior.mean @ prior_precision @ prior.mean) - float(mean @ precision @ mean)
    )
    if rate <= 0:
        raise NumericalDegeneracyError(f"Posterior inverse-gamma rate is not positive ({rate})")
    logger.debug(f"Conjugate BLR posterior: shape={shape:.2f} rate={rate:.4f}")
    return ConjugateBlrPosterior(mean=mean, cov_scale=cov_scale, shape=shape, rate=rate)


def fit_known_noise_blr(
    data: BlrDataset,
    noise_sd: float,
    prior_mean: Optional[np.ndarray] = None,
    prior_cov: Optional[np.ndarray] = None,
) -> GaussianPosteriorSummary:
    """
    Gaussian posterior of beta when sigma is known.

    The log-likelihood is then quadratic in beta, so the second-order p_eff
    approximation is exact.

    Args:
        data: Dataset.
        noise_sd: Known noise standard deviation.
        prior_mean: Prior mean of beta; zeros by default.
        prior_cov: Prior covariance of beta; 100 * I by default.

    Returns:
        GaussianPosteriorSummary over beta (dimension P).
    """
    if noise_sd <= 0:
        raise InputValidationError(f"noise_sd must be positive, got {noise_sd}")
    p = data.p
    prior_mean = np.zeros(p) if prior_mean is None else np.asarray(prior_mean, dtype=float)
    prior_cov = 100.0 * np.eye(p) if prior_cov is None else np.asarray(prior_cov, dtype=float)
    prior_precision = np.linalg.inv(prior_cov)
    x, y = data.design, data.response
    precision = prior_precision + x.T @ x / noise_sd ** 2
    covariance = _symmetrize(np.linalg.inv(precision))
    mean = covariance @ (prior_precision @ prior_mean + x.T @ y / noise_sd ** 2)
    return GaussianPosteriorSummary(mean=mean, covariance=covariance)


def draw_posterior(posterior: ConjugateBlrPosterior, draws: int, seed: int) -> np.ndarray:
    """
    Independent exact draws from the normal-inverse-gamma posterior.

    Args:
        posterior: Conjugate posterior.
        draws: Number of draws S >= 1.
        seed: 64-bit seed.

    Returns:
        S x (P + 1) matrix of (beta, log sigma).
    """
    if draws < 1:
        raise InputValidationError(f"Number of draws must be positive, got {draws}")
    rng = make_generator(seed, StreamPurpose.POSTERIOR_DRAWS)
    sigma2 = stats.invgamma.rvs(a=posterior.shape, scale=posterior.rate, size=draws, random_state=rng)
    chol = np.linalg.cholesky(posterior.cov_scale)
    z = rng.standard_normal((draws, posterior.p))
    beta = posterior.mean + np.sqrt(sigma2)[:, np.newaxis] * (z @ chol.T)
    return np.column_stack([beta, 0.5 * np.log(sigma2)])


def draw_gaussian(summary: GaussianPosteriorSummary, draws: int, seed: int) -> np.ndarray:
    """Independent draws from N(summary.mean, summary.covariance), one row per draw."""
    if draws < 1:
        raise InputValidationError(f"Number of draws must be positive, got {draws}")
    summary.require_psd()
    rng = make_generator(seed, StreamPurpose.POSTERIOR_DRAWS)
    eigenvalues, eigenvectors = np.linalg.eigh(summary.covariance)
    root = eigenvectors * np.sqrt(np.maximum(eigenvalues, 0.0))
    return summary.mean + rng.standard_normal((draws, summary.dim)) @ root.T


def _split_theta(data: BlrDataset, theta: np.ndarray, noise_sd: Optional[float]):
    """Return (beta rows, log sigma per row) for a draw matrix."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if noise_sd is None:
        if theta.shape[1] != data.p + 1:
            raise InputValidationError(
                f"Draws need P + 1 = {data.p + 1} columns (beta, log sigma), got {theta.shape[1]}"
            )
        return theta[:, :data.p], theta[:, data.p]
    if theta.shape[1] != data.p:
        raise InputValidationError(f"Known-noise draws need P = {data.p} columns, got {theta.shape[1]}")
    return theta, np.full(theta.shape[0], math.log(noise_sd))


def loglik_matrix(
    data: BlrDataset,
    draws: np.ndarray,
    noise_sd: Optional[float] = None,
    obs_ids: Optional[Sequence[str]] = None,
) -> LogLikMatrix:
    """
    Gaussian log density of every observation at every draw.

    Args:
        data: Dataset.
        draws: S x (P + 1) matrix of (beta, log sigma), or S x P when ``noise_sd`` is given.
        noise_sd: Known noise standard deviation.
        obs_ids: Optional column identifiers.

    Returns:
        S x n LogLikMatrix.
    """
    beta, log_sigma = _split_theta(data, draws, noise_sd)
    loc = beta @ data.design.T
    values = stats.norm.logpdf(data.response[np.newaxis, :], loc=loc, scale=np.exp(log_sigma)[:, np.newaxis])
    return LogLikMatrix(values, obs_ids=obs_ids)


def point_loglik(data: BlrDataset, theta: np.ndarray, noise_sd: Optional[float] = None) -> np.ndarray:
    """log p(y_i | theta) for a single parameter vector."""
    beta, log_sigma = _split_theta(data, theta, noise_sd)
    return stats.norm.logpdf(data.response, loc=data.design @ beta[0], scale=math.exp(log_sigma[0]))


def exact_loo_blr(data: BlrDataset, prior: Optional[NormalInverseGammaPrior] = None) -> np.ndarray:
    """
    Exact log p(y_i | y_{-i}) for every observation of the conjugate model.

    With leverage h_i = x_i' V_n x_i and residual e_i = y_i - x_i' m_n, the
    leave-one-out predictive is Student-t with 2 a_{-i} degrees of freedom,
    location (x_i' m_n - h_i y_i) / (1 - h_i) and squared scale
    (b_{-i} / a_{-i}) / (1 - h_i), where a_{-i} = a_n - 1/2 and
    b_{-i} = b_n - e_i^2 / (2 (1 - h_i)).

    Args:
        data: Dataset.
        prior: Prior; defaults to ``NormalInverseGammaPrior.isotropic(P)``.

    Returns:
        Length-n vector of exact LOO log predictive densities.

    Raises:
        NumericalDegeneracyError: If deleting an observation loses rank.
    """
    posterior = fit_conjugate_blr(data, prior)
    x, y = data.design, data.response
    leverage = np.einsum("ij,jk,ik->i", x, posterior.cov_scale, x)
    if np.any(leverage >= LEVERAGE_LIMIT):
        worst = int(np.argmax(leverage))
        raise NumericalDegeneracyError(f"Deleting observation {worst} leaves a degenerate posterior")
    fitted = x @ posterior.mean
    resid = y - fitted
    loc = (fitted - leverage * y) / (1.0 - leverage)
    shape_loo = posterior.shape - 0.5
    rate_loo = posterior.rate - 0.5 * resid ** 2 / (1.0 - leverage)
    if shape_loo <= 0 or np.any(rate_loo <= 0):
        raise NumericalDegeneracyError("Leave-one-out inverse-gamma parameters are not positive")
    scale = np.sqrt(rate_loo / shape_loo / (1.0 - leverage))
    return stats.t.logpdf(y, df=2.0 * shape_loo, loc=loc, scale=scale)


def per_obs_derivatives(
    data: BlrDataset,
    theta_hat: np.ndarray,
    noise_sd: Optional[float] = None,
    with_hessians: bool = False,
) -> PerObsDerivatives:
    """
    Analytic gradients (and Hessians) of log p(y_i | theta) at theta_hat.

    With theta = (beta, eta), eta = log sigma and r = y - x' beta:
    grad_beta = r x e^{-2 eta}, d/d eta = -1 + r^2 e^{-2 eta},
    H_beta_beta = -x x' e^{-2 eta}, H_beta_eta = -2 r x e^{-2 eta},
    H_eta_eta = -2 r^2 e^{-2 eta}. With ``noise_sd`` given, theta is beta alone.

    Args:
        data: Dataset.
        theta_hat: Length P + 1 (or P with ``noise_sd``).
        noise_sd: Known noise standard deviation.
        with_hessians: Also compute n x dim x dim Hessians.

    Returns:
        PerObsDerivatives.
    """
    beta, log_sigma = _split_theta(data, theta_hat, noise_sd)
    beta, eta = beta[0], float(log_sigma[0])
    x = data.design
    resid = data.response - x @ beta
    inv_var = math.exp(-2.0 * eta)
    grad_beta = (resid * inv_var)[:, np.newaxis] * x
    if noise_sd is not None:
        hessians = -inv_var * np.einsum("ni,nj->nij", x, x) if with_hessians else None
        return PerObsDerivatives(gradients=grad_beta, hessians=hessians)

    grad_eta = -1.0 + resid ** 2 * inv_var
    gradients = np.column_stack([grad_beta, grad_eta])
    hessians = None
    if with_hessians:
        n, p = x.shape
        hessians = np.empty((n, p + 1, p + 1))
        hessians[:, :p, :p] = -inv_var * np.einsum("ni,nj->nij", x, x)
        cross = -2.0 * grad_beta
        hessians[:, :p, p] = cross
        hessians[:, p, :p] = cross
        hessians[:, p, p] = -2.0 * resid ** 2 * inv_var
    return PerObsDerivatives(gradients=gradients, hessians=hessians)


def summarize_draws(draws: np.ndarray) -> GaussianPosteriorSummary:
    """Posterior mean and covariance estimated from a draw matrix (rows are draws)."""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise NumericalDegeneracyError(f"Need a draw matrix with at least 2 rows, got shape {draws.shape}")
    covariance = np.atleast_2d(np.cov(draws, rowvar=False))
    return GaussianPosteriorSummary(mean=draws.mean(axis=0), covariance=_symmetrize(covariance))
