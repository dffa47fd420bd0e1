"""Data types shared by the surrogate computations."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-8


class SurrogateMethod(str, Enum):
    """How a vector of approximate LOO values was computed."""
    PLPD = "plpd"
    WAIC = "waic_S"
    TIS = "tis_S"
    PSIS = "psis"
    IS = "is"
    DELTA1_WAIC_M = "delta1_waic_m"
    DELTA1_WAIC = "delta1_waic"
    DELTA2_WAIC = "delta2_waic"
    EXACT = "exact"
    ZERO = "zero"


def _frozen_array(values, name: str, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise InputValidationError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InputValidationError(f"{name} contains non-finite entries")
    array.setflags(write=False)
    return array


class LogLikMatrix:
    """
    Pointwise log-likelihood values log p(y_i | theta_s).

    Rows are posterior draws, columns are observations. The matrix is read-only
    once constructed so it can be shared between threads.
    """

    def __init__(self, values: np.ndarray, obs_ids: Optional[Sequence[str]] = None):
        """
        Initialize the matrix.

        Args:
            values: S x n array of finite log-likelihood values.
            obs_ids: Optional observation identifiers, one per column.

        Raises:
            InputValidationError: If the array is not a finite non-empty matrix.
        """
        array = _frozen_array(values, "Log-likelihood matrix", 2)
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise InputValidationError(f"Log-likelihood matrix must be non-empty, got shape {array.shape}")
        self._values = array
        if obs_ids is None:
            obs_ids = [f"obs_{i}" for i in range(array.shape[1])]
        obs_ids = tuple(str(x) for x in obs_ids)
        if len(obs_ids) != array.shape[1]:
            raise InputValidationError(
                f"Got {len(obs_ids)} observation ids for {array.shape[1]} columns"
            )
        self.obs_ids: Tuple[str, ...] = obs_ids

    @property
    def values(self) -> np.ndarray:
        """The full S x n matrix."""
        return self._values

    @property
    def draw_count(self) -> int:
        return self._values.shape[0]

    @property
    def obs_count(self) -> int:
        return self._values.shape[1]

    def head(self, draws: int) -> np.ndarray:
        """
        Return the first ``draws`` rows.

        Reduced-draw surrogates read the matrix only through this method.

        Raises:
            InputValidationError: If ``draws`` is outside [1, S].
        """
        if draws < 1 or draws > self.draw_count:
            raise InputValidationError(
                f"Requested {draws} draws from a matrix with {self.draw_count} draws"
            )
        return self._values[:draws]

    def __repr__(self) -> str:
        return f"LogLikMatrix(draws={self.draw_count}, observations={self.obs_count})"


@dataclass(frozen=True, eq=False)
class SurrogateVector:
    """Approximate LOO values for every observation of one model."""
    values: np.ndarray
    method: SurrogateMethod
    draws_used: int
    diagnostics: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, "Surrogate values", 1))
        object.__setattr__(self, "method", SurrogateMethod(self.method))
        if self.draws_used < 0:
            raise InputValidationError(f"draws_used must be non-negative, got {self.draws_used}")
        if self.diagnostics is not None:
            diagnostics = np.array(self.diagnostics, dtype=float)
            if diagnostics.shape != self.values.shape:
                raise InputValidationError(
                    f"Diagnostics shape {diagnostics.shape} does not match values shape {self.values.shape}"
                )
            diagnostics.setflags(write=False)
            object.__setattr__(self, "diagnostics", diagnostics)

    @property
    def obs_count(self) -> int:
        return self.values.shape[0]

    @property
    def total(self) -> float:
        return float(np.sum(self.values))


@dataclass(frozen=True, eq=False)
class GaussianPosteriorSummary:
    """Posterior mean and covariance of the likelihood parameters."""
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = _frozen_array(self.mean, "Posterior mean", 1)
        covariance = _frozen_array(self.covariance, "Posterior covariance", 2)
        dim = mean.shape[0]
        if covariance.shape != (dim, dim):
            raise InputValidationError(
                f"Covariance shape {covariance.shape} does not match mean length {dim}"
            )
        if not np.allclose(covariance, covariance.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
            raise InputValidationError("Posterior covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @cached_property
    def is_psd(self) -> bool:
        """True when the smallest eigenvalue is above -1e-8 relative to the largest."""
        eigenvalues = np.linalg.eigvalsh(self.covariance)
        scale = max(1.0, float(np.max(np.abs(eigenvalues))))
        return bool(eigenvalues[0] >= -SYMMETRY_TOLERANCE * scale)

    def require_psd(self) -> None:
        if not self.is_psd:
            raise NumericalDegeneracyError("Posterior covariance is not positive semi-definite")


@dataclass(frozen=True, eq=False)
class PerObsDerivatives:
    """Per-observation gradients (n x P) and optional Hessians (n x P x P) at theta-hat."""
    gradients: np.ndarray
    hessians: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        gradients = _frozen_array(self.gradients, "Gradients", 2)
        object.__setattr__(self, "gradients", gradients)
        if self.hessians is not None:
            hessians = _frozen_array(self.hessians, "Hessians", 3)
            n, dim = gradients.shape
            if hessians.shape != (n, dim, dim):
                raise InputValidationError(
                    f"Hessian shape {hessians.shape} does not match gradients shape {gradients.shape}"
                )
            if not np.allclose(hessians, np.swapaxes(hessians, 1, 2), rtol=0.0, atol=SYMMETRY_TOLERANCE):
                raise InputValidationError("Hessian slices are not symmetric")
            object.__setattr__(self, "hessians", hessians)

    @property
    def obs_count(self) -> int:
        return self.gradients.shape[0]

    @property
    def dim(self) -> int:
        return self.gradients.shape[1]
