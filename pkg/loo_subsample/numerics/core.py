"""Log-domain reductions shared by the surrogate and estimator code.

Densities are never exponentiated outside a max-shifted reduction. Sums are
delegated to numpy, which uses pairwise summation on contiguous float arrays,
so results do not depend on how work is split across threads.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp

from loo_subsample.errors import InputValidationError, NumericalDegeneracyError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, list, tuple]


def _as_finite_array(values: ArrayLike, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.size == 0:
        raise InputValidationError(f"Cannot reduce empty {name}")
    if not np.all(np.isfinite(array)):
        raise InputValidationError(f"{name} contains non-finite entries")
    return array


@dataclass(frozen=True, eq=False)
class LogWeightVector:
    """Log importance ratios log r(theta_s) for S posterior draws."""
    values: np.ndarray

    def __post_init__(self):
        array = _as_finite_array(self.values, "log weights")
        if array.ndim != 1:
            raise InputValidationError(f"Log weights must be one-dimensional, got shape {array.shape}")
        object.__setattr__(self, "values", array)

    def __len__(self) -> int:
        return self.values.shape[0]

    def shifted(self, constant: float) -> "LogWeightVector":
        """Return the same weights multiplied by exp(constant)."""
        return LogWeightVector(self.values + constant)


def log_sum_exp(values: ArrayLike, axis: Optional[int] = None) -> Union[float, np.ndarray]:
    """
    Compute log(sum(exp(values))) with max-shift stabilization.

    Args:
        values: Log-values. Must be non-empty and finite.
        axis: Axis to reduce over; None reduces everything.

    Returns:
        A float when ``axis`` is None, otherwise an array with ``axis`` removed.

    Raises:
        InputValidationError: If the input is empty or has non-finite entries.
    """
    array = _as_finite_array(values, "log-values")
    if axis is not None and array.shape[axis] == 0:
        raise InputValidationError("Cannot reduce over an empty axis")
    result = logsumexp(array, axis=axis)
    if axis is None:
        return float(result)
    return np.asarray(result)


def log_mean_exp(values: ArrayLike, axis: Optional[int] = None) -> Union[float, np.ndarray]:
    """Compute log(mean(exp(values))), i.e. ``log_sum_exp(values) - log(count)``."""
    array = _as_finite_array(values, "log-values")
    count = array.size if axis is None else array.shape[axis]
    return log_sum_exp(array, axis=axis) - np.log(count)


def self_normalized_log_expectation(
    log_f: ArrayLike,
    log_r: Union[LogWeightVector, ArrayLike],
    axis: Optional[int] = None,
) -> Union[float, np.ndarray]:
    """
    Self-normalized importance sampling estimate of log E[f] in the log domain.

    Computes ``log(sum(f * r) / sum(r))``. The result does not change when a
    constant is added to ``log_r``.

    Args:
        log_f: Log of the integrand at each draw.
        log_r: Log importance ratios, same shape as ``log_f``.
        axis: Draw axis when the inputs are matrices (one column per observation).

    Returns:
        The log expectation (float, or array when ``axis`` is given).

    Raises:
        InputValidationError: If shapes differ or entries are non-finite.
    """
    if isinstance(log_r, LogWeightVector):
        log_r = log_r.values
    f = _as_finite_array(log_f, "log integrand")
    r = _as_finite_array(log_r, "log weights")
    if f.shape != r.shape:
        raise InputValidationError(
            f"Log integrand shape {f.shape} does not match log weight shape {r.shape}"
        )
    return log_sum_exp(f + r, axis=axis) - log_sum_exp(r, axis=axis)


def sample_variance(values: ArrayLike, axis: Optional[int] = None) -> Union[float, np.ndarray]:
    """
    Unbiased sample variance with divisor (count - 1).

    Raises:
        NumericalDegeneracyError: If fewer than two values are available.
        InputValidationError: If entries are non-finite.
    """
    array = np.asarray(values, dtype=float)
    count = array.size if axis is None else (array.shape[axis] if array.ndim else 0)
    if count < 2:
        raise NumericalDegeneracyError(
            f"Sample variance needs at least 2 values, got {count}"
        )
    array = _as_finite_array(array, "values")
    result = np.var(array, axis=axis, ddof=1)
    if axis is None:
        return float(result)
    return np.asarray(result)
