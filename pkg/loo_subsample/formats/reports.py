"""JSON report rendering and atomic file output."""

import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from loo_subsample.estimators.results import ComparisonResult, ElpdEstimate
from loo_subsample.surrogates.importance import PARETO_K_THRESHOLD

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """Convert numpy scalars and containers into JSON-native values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def render_json(payload: Dict[str, Any]) -> str:
    """
    Serialize a report with the caller's key order and shortest round-trip floats.

    Raises:
        ValueError: If the payload contains NaN or infinity.
    """
    return json.dumps(_plain(payload), indent=2, allow_nan=False) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {target}")


def emit_report(payload: Dict[str, Any], out: Optional[str] = None) -> str:
    """Render ``payload`` and write it to ``out`` (atomically) or to stdout."""
    text = render_json(payload)
    if out:
        atomic_write_text(out, text)
        logger.info(f"Report written to {out}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
    return text


def pareto_k_summary(pareto_k: Optional[np.ndarray]) -> Optional[Dict[str, Any]]:
    """Count, finite maximum and count above the reliability threshold of Pareto k values."""
    if pareto_k is None:
        return None
    k = np.asarray(pareto_k, dtype=float)
    finite = k[np.isfinite(k)]
    return {
        "count": int(k.size),
        "max": float(np.max(finite)) if finite.size else None,
        "above_threshold": int(np.sum(k > PARETO_K_THRESHOLD)),
        "threshold": PARETO_K_THRESHOLD,
    }


def _optional_float(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(value)


def estimate_payload(
    estimate: ElpdEstimate,
    seed: Optional[int],
    pareto_k: Optional[np.ndarray] = None,
) -> Dict[str, Any]:
    """Report fields of one estimate, in fixed order."""
    sigma_total = estimate.sigma_loo_total
    return {
        "elpd_hat": estimate.elpd_hat,
        "se_subsampling": estimate.se_subsampling,
        "sigma_loo_hat": _optional_float(estimate.sigma_loo_hat),
        "n": estimate.n,
        "m": estimate.m,
        "estimator": estimate.estimator.value,
        "surrogate": estimate.surrogate_method,
        "seed": seed,
        "pareto_k_summary": pareto_k_summary(pareto_k),
        "scheme": estimate.scheme,
        "elpd_mean": estimate.elpd_mean,
        "sigma_loo_total": sigma_total,
        "sigma_loo_degenerate": estimate.sigma_loo_degenerate,
    }


def comparison_payload(
    result: ComparisonResult,
    seed: Optional[int],
    pareto_k: Optional[Dict[str, Optional[np.ndarray]]] = None,
) -> Dict[str, Any]:
    """Report fields of a comparison, with one nested estimate per model."""
    pareto_k = pareto_k or {}
    return {
        "elpd_d_hat": result.elpd_d_hat,
        "se_d": result.se_d,
        "sigma_d_hat": result.sigma_d_hat,
        "naive_sigma_d": result.naive_sigma_d,
        "sigma_d_total": result.sigma_d_total,
        "sigma_d_degenerate": result.sigma_d_degenerate,
        "seed": seed,
        "per_model": [
            estimate_payload(est, seed, pareto_k.get(label))
            for label, est in zip(("a", "b"), result.per_model)
        ],
    }
