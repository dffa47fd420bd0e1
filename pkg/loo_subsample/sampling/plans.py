"""Subsample plans: which observations get an exact LOO evaluation."""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from loo_subsample.errors import InputValidationError
from loo_subsample.surrogates.types import SurrogateVector
from loo_subsample.utils.rng import StreamPurpose, make_generator, validate_seed

logger = logging.getLogger(__name__)

MAX_ENUMERATED_SUBSETS = 10**6
PROBABILITY_SUM_TOLERANCE = 1e-12


class SamplingScheme(str, Enum):
    """Subsampling designs."""
    SRS_WOR = "srs_wor"
    SRS_WR = "srs_wr"
    PPS_WR = "pps_wr"


@dataclass(frozen=True, eq=False)
class SubsamplePlan:
    """An immutable subsample of observation indices and the design that drew it."""
    indices: np.ndarray
    scheme: SamplingScheme
    n: int
    draw_probs: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        indices = np.array(self.indices, dtype=np.int64)
        scheme = SamplingScheme(self.scheme)
        if indices.ndim != 1 or indices.size == 0:
            raise InputValidationError("A subsample plan needs at least one index")
        if self.n < 1:
            raise InputValidationError(f"Population size must be positive, got {self.n}")
        if np.any(indices < 0) or np.any(indices >= self.n):
            raise InputValidationError(f"Plan indices must lie in [0, {self.n})")
        if scheme == SamplingScheme.SRS_WOR and np.unique(indices).size != indices.size:
            raise InputValidationError("Without-replacement plan has repeated indices")
        if scheme == SamplingScheme.PPS_WR:
            if self.draw_probs is None:
                raise InputValidationError("A pps_wr plan must store its draw probabilities")
            probs = _check_probabilities(self.draw_probs)
            if probs.shape[0] != self.n:
                raise InputValidationError(
                    f"Draw probabilities have length {probs.shape[0]}, population size is {self.n}"
                )
            probs.setflags(write=False)
            object.__setattr__(self, "draw_probs", probs)
        elif self.draw_probs is not None:
            raise InputValidationError(f"Scheme {scheme.value} does not use draw probabilities")
        indices.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "scheme", scheme)

    @property
    def m(self) -> int:
        return self.indices.shape[0]

    @property
    def sampling_fraction(self) -> float:
        return self.m / self.n


def _check_probabilities(probs: Sequence[float]) -> np.ndarray:
    array = np.array(probs, dtype=float)
    if array.ndim != 1 or array.size == 0:
        raise InputValidationError("Draw probabilities must be a non-empty vector")
    if not np.all(np.isfinite(array)) or np.any(array <= 0):
        raise InputValidationError("Draw probabilities must be finite and strictly positive")
    total = np.sum(array)
    if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
        array = array / total
    return array


def plan_from_indices(indices: Sequence[int], n: int) -> SubsamplePlan:
    """Wrap a fixed set of distinct indices as a without-replacement plan."""
    return SubsamplePlan(indices=np.asarray(indices), scheme=SamplingScheme.SRS_WOR, n=n)


def srs_wor(n: int, m: int, seed: int) -> SubsamplePlan:
    """
    Simple random sample without replacement by partial Fisher-Yates shuffle.

    Every size-m subset is equally likely. Indices are kept in draw order.

    Args:
        n: Population size.
        m: Subsample size, 1 <= m <= n.
        seed: 64-bit seed.

    Returns:
        SubsamplePlan with scheme ``srs_wor``.

    Raises:
        InputValidationError: If m is outside [1, n].
    """
    if m < 1 or m > n:
        raise InputValidationError(f"Subsample size must satisfy 1 <= m <= n, got m={m}, n={n}")
    rng = make_generator(seed, StreamPurpose.PLAN)
    pool = np.arange(n, dtype=np.int64)
    picks = rng.integers(np.arange(m), n)
    for k, j in enumerate(picks):
        pool[k], pool[j] = pool[j], pool[k]
    logger.debug(f"Drew srs_wor plan of {m} from {n} with seed {seed}")
    return SubsamplePlan(indices=pool[:m].copy(), scheme=SamplingScheme.SRS_WOR, n=n, seed=validate_seed(seed))


def srs_wr(n: int, m: int, seed: int) -> SubsamplePlan:
    """Simple random sample with replacement: m independent uniform draws."""
    if n < 1 or m < 1:
        raise InputValidationError(f"Need n >= 1 and m >= 1, got m={m}, n={n}")
    rng = make_generator(seed, StreamPurpose.PLAN)
    indices = rng.integers(0, n, size=m)
    return SubsamplePlan(indices=indices, scheme=SamplingScheme.SRS_WR, n=n, seed=validate_seed(seed))


def pps_wr(probs: Sequence[float], m: int, seed: int) -> SubsamplePlan:
    """
    Probability-proportional-to-size sample with replacement.

    Args:
        probs: Positive size measures for each of the n units; normalized internally.
        m: Number of independent draws.
        seed: 64-bit seed.

    Returns:
        SubsamplePlan with scheme ``pps_wr`` and the normalized draw probabilities.

    Raises:
        InputValidationError: If probabilities are non-positive or non-finite.
    """
    if m < 1:
        raise InputValidationError(f"Subsample size must be positive, got {m}")
    normalized = _check_probabilities(probs)
    rng = make_generator(seed, StreamPurpose.PLAN)
    # inverse-CDF draws keep the categorical sampler explicit and deterministic
    cdf = np.cumsum(normalized)
    cdf[-1] = 1.0
    indices = np.searchsorted(cdf, rng.random(m), side="right")
    return SubsamplePlan(
        indices=indices,
        scheme=SamplingScheme.PPS_WR,
        n=normalized.shape[0],
        draw_probs=normalized,
        seed=validate_seed(seed),
    )


def pps_probabilities(surrogate: SurrogateVector) -> np.ndarray:
    """
    Draw probabilities proportional to |surrogate_i|.

    Raises:
        InputValidationError: If any surrogate value is exactly zero.
    """
    magnitude = np.abs(surrogate.values)
    if np.any(magnitude == 0):
        raise InputValidationError("Cannot draw proportional to a surrogate with zero entries")
    return magnitude / np.sum(magnitude)


def draw_plan(scheme: SamplingScheme, n: int, m: int, seed: int,
              probs: Optional[np.ndarray] = None) -> SubsamplePlan:
    """Dispatch to the sampler for ``scheme``."""
    scheme = SamplingScheme(scheme)
    if scheme == SamplingScheme.SRS_WOR:
        return srs_wor(n, m, seed)
    if scheme == SamplingScheme.SRS_WR:
        return srs_wr(n, m, seed)
    if probs is None:
        raise InputValidationError("The pps_wr scheme needs draw probabilities")
    return pps_wr(probs, m, seed)


def enumerate_subsamples_wor(n: int, m: int) -> Iterator[Tuple[int, ...]]:
    """
    Yield every size-m subset of range(n) once, in lexicographic order.

    Raises:
        InputValidationError: If m is outside [1, n] or there are more than
            10**6 subsets; use Monte-Carlo replicates instead.
    """
    if m < 1 or m > n:
        raise InputValidationError(f"Subsample size must satisfy 1 <= m <= n, got m={m}, n={n}")
    count = math.comb(n, m)
    if count > MAX_ENUMERATED_SUBSETS:
        raise InputValidationError(
            f"C({n}, {m}) = {count} subsets exceeds the enumeration limit of "
            f"{MAX_ENUMERATED_SUBSETS}; use Monte-Carlo replicates instead"
        )
    return itertools.combinations(range(n), m)
