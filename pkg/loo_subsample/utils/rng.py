"""Seeded random streams.

Every random quantity in the package comes from a ``numpy.random.Generator``
derived from ``(seed, purpose, *keys)`` through ``numpy.random.SeedSequence``
spawn keys, so replicate ``r`` of an experiment draws the same numbers no matter
how many threads run or in which order replicates finish.
"""

from enum import IntEnum

import numpy as np

from loo_subsample.errors import InputValidationError


class StreamPurpose(IntEnum):
    """Tags separating the independent sub-streams of one seed."""
    PLAN = 1
    SIMULATE = 2
    POSTERIOR_DRAWS = 3
    REPLICATE = 4
    ORACLE = 5


MAX_SEED = 2**64 - 1


def validate_seed(seed: int) -> int:
    """Return ``seed`` as an int after checking it is a 64-bit unsigned value."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InputValidationError(f"Seed must be an integer, got {seed!r}")
    seed = int(seed)
    if seed < 0 or seed > MAX_SEED:
        raise InputValidationError(f"Seed must be in [0, 2**64 - 1], got {seed}")
    return seed


def make_generator(seed: int, purpose: StreamPurpose, *keys: int) -> np.random.Generator:
    """
    Build an independent generator for one (seed, purpose, keys) triple.

    Args:
        seed: User-supplied 64-bit seed.
        purpose: Which part of the pipeline consumes the stream.
        keys: Further non-negative integers, e.g. a replicate index.

    Returns:
        A PCG64-backed ``numpy.random.Generator``.
    """
    seed = validate_seed(seed)
    spawn_key = (int(purpose),) + tuple(int(k) for k in keys)
    if any(k < 0 for k in spawn_key):
        raise InputValidationError(f"Stream keys must be non-negative, got {keys}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed: int, purpose: StreamPurpose, *keys: int) -> int:
    """Derive a child 64-bit seed, recorded in reports for replicate plans."""
    seed = validate_seed(seed)
    spawn_key = (int(purpose),) + tuple(int(k) for k in keys)
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
