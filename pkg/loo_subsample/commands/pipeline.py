"""The simulate, surrogate, estimate and compare commands."""

import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from loo_subsample.config import RunConfig
from loo_subsample.errors import InputValidationError
from loo_subsample.estimators.compare import compare_models, estimate_model
from loo_subsample.formats.csv_io import (
    export_loglik_csv,
    ingest_loglik_csv,
    read_dataset_csv,
    read_draws_csv,
    read_exact_csv,
    write_dataset_csv,
    write_draws_csv,
    write_loo_vector_csv,
    write_surrogate_csv,
)
from loo_subsample.formats.reports import comparison_payload, emit_report, estimate_payload
from loo_subsample.models.blr import (
    BlrDataset,
    NormalInverseGammaPrior,
    draw_posterior,
    drop_covariates,
    exact_loo_blr,
    fit_conjugate_blr,
    loglik_matrix,
    simulate_blr,
)
from loo_subsample.sampling.plans import SamplingScheme, SubsamplePlan, draw_plan, pps_probabilities
from loo_subsample.surrogates.dispatch import compute_surrogate, exact_at_sample
from loo_subsample.surrogates.types import LogLikMatrix, SurrogateVector
from loo_subsample.utils.rng import StreamPurpose, derive_seed

logger = logging.getLogger(__name__)


@dataclass
class ModelInputs:
    """Everything read from disk for one model."""
    loglik: LogLikMatrix
    dataset: Optional[BlrDataset] = None
    draws: Optional[np.ndarray] = None
    exact: Optional[np.ndarray] = None


def load_model_inputs(config: RunConfig, suffix: str = "") -> ModelInputs:
    """Read the log-likelihood and optional dataset, draws and exact files for model A ("") or B ("_b")."""
    loglik_path = getattr(config, f"loglik{suffix}")
    if loglik_path is None:
        raise InputValidationError(f"Missing required input 'loglik{suffix}'")
    loglik = ingest_loglik_csv(loglik_path)
    dataset_path = getattr(config, f"dataset{suffix}")
    draws_path = getattr(config, f"draws{suffix}")
    exact_path = getattr(config, f"exact{suffix}")
    return ModelInputs(
        loglik=loglik,
        dataset=read_dataset_csv(dataset_path) if dataset_path else None,
        draws=read_draws_csv(draws_path) if draws_path else None,
        exact=read_exact_csv(exact_path, loglik.obs_ids) if exact_path else None,
    )


def build_surrogate(config: RunConfig, inputs: ModelInputs) -> SurrogateVector:
    return compute_surrogate(
        config.surrogate,
        inputs.loglik,
        draws_used=config.draws_used,
        dataset=inputs.dataset,
        draws=inputs.draws,
        exact=inputs.exact,
    )


def require_subsample_size(config: RunConfig, n: int) -> int:
    if config.m is None:
        raise InputValidationError("Subsample size m is required")
    if config.scheme == SamplingScheme.SRS_WOR.value and config.m > n:
        raise InputValidationError(f"m={config.m} exceeds n={n} for sampling without replacement")
    return config.m


def _draw_shared_plan(config: RunConfig, n: int, surrogate: SurrogateVector) -> SubsamplePlan:
    m = require_subsample_size(config, n)
    probs = pps_probabilities(surrogate) if config.scheme == SamplingScheme.PPS_WR.value else None
    plan = draw_plan(SamplingScheme(config.scheme), n, m, config.seed, probs)
    logger.info(f"Drew {plan.scheme.value} plan m={plan.m} n={plan.n} seed={config.seed}")
    return plan


def cmd_simulate(config: RunConfig) -> Dict[str, Any]:
    """
    Simulate a regression dataset, exact posterior draws, the log-likelihood matrix and exact LOO values.

    Files are written into the ``out`` directory; with ``drop_covariates > 0``
    the nested model B gets ``*_b.csv`` counterparts fitted on the same data.
    """
    if not config.out:
        raise InputValidationError("simulate needs an output directory (--out)")
    os.makedirs(config.out, exist_ok=True)
    data = simulate_blr(config.n, config.p, config.target_r2, config.sparse, config.seed)

    models = [("", data, config.seed)]
    if config.drop_covariates > 0:
        models.append(("_b", drop_covariates(data, config.drop_covariates),
                       derive_seed(config.seed, StreamPurpose.POSTERIOR_DRAWS, 1)))

    summary: Dict[str, Any] = {
        "n": data.n,
        "p": data.p,
        "draws": config.draws_count,
        "target_r2": config.target_r2,
        "sparse": config.sparse,
        "noise_sd": data.noise_sd,
        "seed": config.seed,
        "models": [],
    }
    for suffix, model_data, draw_seed in models:
        prior = NormalInverseGammaPrior.isotropic(
            model_data.p, scale=config.prior_scale, shape=config.prior_shape, rate=config.prior_rate
        )
        posterior = fit_conjugate_blr(model_data, prior)
        draws = draw_posterior(posterior, config.draws_count, draw_seed)
        loglik = loglik_matrix(model_data, draws)
        exact = exact_loo_blr(model_data, prior)
        paths = {
            "dataset": os.path.join(config.out, f"dataset{suffix}.csv"),
            "draws": os.path.join(config.out, f"draws{suffix}.csv"),
            "loglik": os.path.join(config.out, f"loglik{suffix}.csv"),
            "exact": os.path.join(config.out, f"exact_loo{suffix}.csv"),
        }
        write_dataset_csv(model_data, paths["dataset"])
        write_draws_csv(draws, paths["draws"])
        export_loglik_csv(loglik, paths["loglik"])
        write_loo_vector_csv(paths["exact"], loglik.obs_ids, exact)
        summary["models"].append({"p": model_data.p, "elpd_loo": float(np.sum(exact)), "files": paths})
        logger.info(f"Model{suffix or ' A'}: exact elpd_loo={np.sum(exact):.4f}")
    emit_report(summary)
    return summary


def cmd_surrogate(config: RunConfig) -> Dict[str, Any]:
    """Compute a surrogate for every observation and write it as an obs_id,value[,pareto_k] CSV."""
    if not config.out:
        raise InputValidationError("surrogate needs an output file (--out)")
    inputs = load_model_inputs(config)
    surrogate = build_surrogate(config, inputs)
    write_surrogate_csv(surrogate, inputs.loglik.obs_ids, config.out)
    summary = {
        "surrogate": surrogate.method.value,
        "draws_used": surrogate.draws_used,
        "n": surrogate.obs_count,
        "total": surrogate.total,
        "file": config.out,
    }
    emit_report(summary)
    return summary


def cmd_estimate(config: RunConfig) -> Dict[str, Any]:
    """Estimate elpd_loo of one model from a subsample and emit the JSON report."""
    inputs = load_model_inputs(config)
    surrogate = build_surrogate(config, inputs)
    plan = _draw_shared_plan(config, inputs.loglik.obs_count, surrogate)
    exact, pareto_k = exact_at_sample(plan, inputs.loglik, inputs.exact)
    estimate = estimate_model(surrogate, exact, plan)
    if pareto_k is None:
        pareto_k = surrogate.diagnostics
    payload = estimate_payload(estimate, config.seed, pareto_k)
    emit_report(payload, config.out)
    return payload


def cmd_compare(config: RunConfig) -> Dict[str, Any]:
    """Compare models A and B on one shared subsample and emit the JSON report."""
    inputs_a = load_model_inputs(config)
    inputs_b = load_model_inputs(config, "_b")
    if inputs_a.loglik.obs_ids != inputs_b.loglik.obs_ids:
        raise InputValidationError("Models A and B must share observation identifiers in the same order")
    if config.scheme == SamplingScheme.PPS_WR.value:
        raise InputValidationError("compare supports srs_wor and srs_wr plans")
    surr_a = build_surrogate(config, inputs_a)
    surr_b = build_surrogate(config, inputs_b)
    plan = _draw_shared_plan(config, inputs_a.loglik.obs_count, surr_a)
    exact_a, k_a = exact_at_sample(plan, inputs_a.loglik, inputs_a.exact)
    exact_b, k_b = exact_at_sample(plan, inputs_b.loglik, inputs_b.exact)
    result = compare_models(surr_a, surr_b, exact_a, exact_b, plan)
    payload = comparison_payload(result, config.seed, {"a": k_a, "b": k_b})
    emit_report(payload, config.out)
    return payload
