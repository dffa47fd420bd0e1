"""Main entry point for the loo-subsample command-line tool."""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from loo_subsample.commands.pipeline import cmd_compare, cmd_estimate, cmd_simulate, cmd_surrogate
from loo_subsample.commands.replicate import cmd_replicate
from loo_subsample.commands.verify import cmd_verify
from loo_subsample.config import RunConfig, load_config
from loo_subsample.errors import ExitCode, LooSubsampleError
from loo_subsample.utils.logging import setup_logging

logger = logging.getLogger(__name__)

COMMANDS: Dict[str, Callable[[RunConfig], dict]] = {
    "simulate": cmd_simulate,
    "surrogate": cmd_surrogate,
    "estimate": cmd_estimate,
    "compare": cmd_compare,
    "replicate": cmd_replicate,
    "verify": cmd_verify,
}

# flags that map onto RunConfig fields; the rest only steer logging
_RUN_OPTIONS = (
    "seed", "m", "surrogate", "draws_used", "scheme", "out", "threads", "replicates",
    "loglik", "loglik_b", "dataset", "dataset_b", "draws", "draws_b", "exact", "exact_b",
    "n", "p", "draws_count", "target_r2", "sparse", "drop_covariates",
    "prior_scale", "prior_shape", "prior_rate", "include_timing",
)


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", "-c", help="Path to a key=value config file")
    parser.add_argument("--verbose", "-v", help="Enable verbose logging", action="store_true")
    parser.add_argument("--debug", "-d", help="Enable debug level logging (even more verbose)", action="store_true")
    parser.add_argument("--log-file", "-l", help="Also write logs to this file")
    parser.add_argument("--seed", type=int, help="64-bit seed (required except for verify)")
    parser.add_argument("--m", type=int, help="Subsample size")
    parser.add_argument("--surrogate", help="plpd, waic, tis, psis, is, delta1_waic_m, delta1_waic, delta2_waic, exact, zero")
    parser.add_argument("--draws-used", type=int, help="Leading posterior draws used by the surrogate")
    parser.add_argument("--scheme", help="srs_wor, srs_wr or pps_wr")
    parser.add_argument("--out", help="Output file (output directory for simulate); stdout when omitted")
    parser.add_argument("--threads", type=int, help="Worker threads for replicate")
    parser.add_argument("--replicates", type=int, help="Number of replicate subsamples")
    for name in ("loglik", "dataset", "draws", "exact"):
        parser.add_argument(f"--{name}", help=f"Model A {name} CSV")
        parser.add_argument(f"--{name}-b", help=f"Model B {name} CSV")
    parser.add_argument("--n", type=int, help="simulate: number of observations")
    parser.add_argument("--p", type=int, help="simulate: number of covariates")
    parser.add_argument("--draws-count", type=int, help="simulate: number of posterior draws")
    parser.add_argument("--target-r2", type=float, help="simulate: population R^2")
    parser.add_argument("--sparse", action="store_true", default=None, help="simulate: single nonzero coefficient")
    parser.add_argument("--drop-covariates", type=int, help="simulate: covariates removed for model B")
    parser.add_argument("--prior-scale", type=float, help="simulate: prior coefficient scale")
    parser.add_argument("--prior-shape", type=float, help="simulate: inverse-gamma prior shape")
    parser.add_argument("--prior-rate", type=float, help="simulate: inverse-gamma prior rate")
    parser.add_argument("--include-timing", action="store_true", default=None,
                        help="replicate: report wall time (makes output non-deterministic)")
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="loo-subsample",
        description="Estimate and compare elpd_loo from a subsample of exact LOO evaluations",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()
    for name, handler in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=(handler.__doc__ or "").strip().splitlines()[0])
    return parser.parse_args(argv)


def run(args: argparse.Namespace) -> int:
    """Load the configuration, run the command and map failures to exit codes."""
    try:
        overrides = {name: getattr(args, name) for name in _RUN_OPTIONS}
        overrides["command"] = args.command
        config = load_config(args.config, overrides)
        COMMANDS[args.command](config)
        return ExitCode.SUCCESS
    except LooSubsampleError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except FileNotFoundError as e:
        logger.error(f"File error: {e}")
        return ExitCode.INPUT
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return ExitCode.INVARIANT


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point."""
    args = parse_args(argv)

    log_level = logging.DEBUG if args.debug else (logging.INFO if args.verbose else logging.WARNING)
    setup_logging(log_file=args.log_file, level=log_level)

    sys.exit(int(run(args)))


if __name__ == "__main__":
    main()
