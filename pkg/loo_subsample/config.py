"""Run configuration for the loo-subsample commands."""

import logging
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values

from loo_subsample.errors import InputValidationError
from loo_subsample.sampling.plans import SamplingScheme
from loo_subsample.surrogates.dispatch import SurrogateName
from loo_subsample.utils.rng import validate_seed

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}
_INPUT_PATHS = ("loglik", "loglik_b", "dataset", "dataset_b", "draws", "draws_b", "exact", "exact_b")


@dataclass
class RunConfig:
    """Parameters of one command run. File keys and CLI flags share these names."""
    command: str = ""
    seed: Optional[int] = None
    m: Optional[int] = None
    surrogate: str = SurrogateName.PLPD.value
    draws_used: Optional[int] = None
    scheme: str = SamplingScheme.SRS_WOR.value
    out: Optional[str] = None
    threads: int = 1
    replicates: int = 100
    loglik: Optional[str] = None
    loglik_b: Optional[str] = None
    dataset: Optional[str] = None
    dataset_b: Optional[str] = None
    draws: Optional[str] = None
    draws_b: Optional[str] = None
    exact: Optional[str] = None
    exact_b: Optional[str] = None
    # simulate
    n: int = 1000
    p: int = 5
    draws_count: int = 4000
    target_r2: float = 0.5
    sparse: bool = False
    drop_covariates: int = 0
    prior_scale: float = 10.0
    prior_shape: float = 2.0
    prior_rate: float = 1.0
    include_timing: bool = False


def _coerce(name: str, raw: Any, kind: Any) -> Any:
    if raw is None or raw == "":
        return None
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind in (int, Optional[int]):
            return int(text)
        if kind in (float, Optional[float]):
            return float(text)
    except ValueError:
        raise InputValidationError(f"Config key '{name}' expects a number, got '{raw}'")
    if kind is bool:
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise InputValidationError(f"Config key '{name}' expects true or false, got '{raw}'")
    return text


def _validate(config: RunConfig) -> None:
    if config.command != "verify":
        if config.seed is None:
            raise InputValidationError("A seed is required; set 'seed' in the config file or pass --seed")
    if config.seed is not None:
        config.seed = validate_seed(config.seed)
    try:
        SurrogateName(config.surrogate)
    except ValueError:
        choices = ", ".join(s.value for s in SurrogateName)
        raise InputValidationError(f"Unknown surrogate '{config.surrogate}'; choose one of {choices}")
    try:
        SamplingScheme(config.scheme)
    except ValueError:
        raise InputValidationError(f"Unknown scheme '{config.scheme}'")
    if config.m is not None and config.m < 1:
        raise InputValidationError(f"m must be positive, got {config.m}")
    if config.draws_used is not None and config.draws_used < 1:
        raise InputValidationError(f"draws_used must be positive, got {config.draws_used}")
    if config.threads < 1:
        raise InputValidationError(f"threads must be positive, got {config.threads}")
    for key in _INPUT_PATHS:
        path = getattr(config, key)
        if path is not None and not os.path.exists(path):
            raise FileNotFoundError(f"Input file for '{key}' not found: {path}")


def load_config(config_path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Load a run configuration from a flat key=value file and command-line overrides.

    Args:
        config_path: Path to the config file, or None to use overrides and defaults only.
        overrides: Values from command-line flags; entries that are None are ignored.

    Returns:
        RunConfig with typed values.

    Raises:
        FileNotFoundError: If the config file or a referenced input file doesn't exist.
        InputValidationError: On unknown keys, bad values or a missing seed.
    """
    known = {f.name: f.type for f in fields(RunConfig)}
    values: Dict[str, Any] = {}

    if config_path is not None:
        if not os.path.exists(config_path):
            template_path = Path(__file__).parent / "config.template.env"
            raise FileNotFoundError(
                f"Config file {config_path} not found. "
                f"Create one based on the template at {template_path}"
            )
        logger.info(f"Loading configuration from {config_path}")
        for key, raw in dotenv_values(config_path).items():
            name = key.strip().lower()
            if name not in known:
                raise InputValidationError(f"Unknown config key '{key}' in {config_path}")
            values[name] = raw

    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in known:
            raise InputValidationError(f"Unknown option '{key}'")
        values[key] = raw

    typed = {}
    for name, raw in values.items():
        value = _coerce(name, raw, known[name])
        if value is not None:
            typed[name] = value
    config = RunConfig(**typed)
    _validate(config)
    return config
