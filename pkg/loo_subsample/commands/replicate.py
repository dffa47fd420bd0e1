"""Repeated subsampling against fixed surrogates and exact values."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from loo_subsample.commands.pipeline import build_surrogate, load_model_inputs, require_subsample_size
from loo_subsample.config import RunConfig
from loo_subsample.errors import InputValidationError
from loo_subsample.estimators.compare import estimate_model
from loo_subsample.formats.reports import emit_report
from loo_subsample.sampling.plans import SamplingScheme, draw_plan, pps_probabilities
from loo_subsample.surrogates.importance import psis_surrogate
from loo_subsample.surrogates.types import SurrogateVector
from loo_subsample.utils.rng import StreamPurpose, derive_seed

logger = logging.getLogger(__name__)


class ReplicateResult(BaseModel):
    """One replicate's plan seed and estimate."""
    model_config = ConfigDict(frozen=True)

    replicate: int
    seed: int
    elpd_hat: float
    se_subsampling: float
    sigma_loo_hat: Optional[float] = None


class ReplicateReport(BaseModel):
    """Spread of elpd_hat across independent subsamples next to the mean reported SE."""
    model_config = ConfigDict(frozen=True)

    surrogate: str
    scheme: str
    n: int
    m: int
    seed: int
    replicate_count: int = Field(ge=2)
    reference_elpd: float
    empirical_se: float
    mean_se: float
    mean_elpd_hat: float
    replicates: List[ReplicateResult]
    wall_time_seconds: Optional[float] = None

    def to_payload(self, include_timing: bool = False) -> Dict[str, Any]:
        payload = self.model_dump(mode="json", exclude={"wall_time_seconds"})
        if include_timing:
            payload["wall_time_seconds"] = self.wall_time_seconds
        return payload


def run_replicates(
    surrogate: SurrogateVector,
    exact: np.ndarray,
    scheme: SamplingScheme,
    m: int,
    seed: int,
    replicates: int,
    threads: int = 1,
) -> ReplicateReport:
    """
    Draw ``replicates`` independent plans and estimate elpd_loo for each.

    Plan r uses the seed derived from (seed, r), so results do not depend on
    ``threads``; they are collected in replicate order.

    Args:
        surrogate: Fixed surrogate for all n observations.
        exact: Exact LOO values for all n observations.
        scheme: Sampling scheme.
        m: Subsample size.
        seed: Base seed.
        replicates: Number of replicates, at least 2.
        threads: Worker threads.

    Returns:
        ReplicateReport.
    """
    if replicates < 2:
        raise InputValidationError(f"Need at least 2 replicates for an empirical SE, got {replicates}")
    exact = np.asarray(exact, dtype=float)
    if exact.shape != (surrogate.obs_count,):
        raise InputValidationError(f"Exact values have shape {exact.shape}, expected ({surrogate.obs_count},)")
    scheme = SamplingScheme(scheme)
    n = surrogate.obs_count
    probs = pps_probabilities(surrogate) if scheme == SamplingScheme.PPS_WR else None
    start = time.perf_counter()

    def one(index: int) -> ReplicateResult:
        plan_seed = derive_seed(seed, StreamPurpose.REPLICATE, index)
        plan = draw_plan(scheme, n, m, plan_seed, probs)
        estimate = estimate_model(surrogate, exact[plan.indices], plan)
        logger.debug(f"Replicate {index}: elpd_hat={estimate.elpd_hat:.4f} se={estimate.se_subsampling:.4f}")
        return ReplicateResult(
            replicate=index,
            seed=plan_seed,
            elpd_hat=estimate.elpd_hat,
            se_subsampling=estimate.se_subsampling,
            sigma_loo_hat=estimate.sigma_loo_hat,
        )

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(one, range(replicates)))

    elpd = np.array([r.elpd_hat for r in results])
    se = np.array([r.se_subsampling for r in results])
    elapsed = time.perf_counter() - start
    logger.info(f"{replicates} replicates of {surrogate.method.value} took {elapsed:.2f}s")
    return ReplicateReport(
        surrogate=surrogate.method.value,
        scheme=scheme.value,
        n=n,
        m=m,
        seed=seed,
        replicate_count=replicates,
        reference_elpd=float(np.sum(exact)),
        empirical_se=float(np.std(elpd, ddof=1)),
        mean_se=float(np.mean(se)),
        mean_elpd_hat=float(np.mean(elpd)),
        replicates=results,
        wall_time_seconds=elapsed,
    )


def cmd_replicate(config: RunConfig) -> Dict[str, Any]:
    """
    Run the replicate experiment for one model.

    Exact values come from the exact file when configured, otherwise from
    PSIS-LOO over all draws.
    """
    inputs = load_model_inputs(config)
    surrogate = build_surrogate(config, inputs)
    m = require_subsample_size(config, surrogate.obs_count)
    exact = inputs.exact if inputs.exact is not None else psis_surrogate(inputs.loglik).values
    report = run_replicates(
        surrogate,
        exact,
        SamplingScheme(config.scheme),
        m,
        config.seed,
        config.replicates,
        config.threads,
    )
    payload = report.to_payload(config.include_timing)
    emit_report(payload, config.out)
    return payload
