"""Seed derivation helpers.

All randomness in the package flows through numpy's PCG64 generator seeded
from explicit integer keys. Derived streams are built by extending the key
tuple, e.g. (master_seed, cell, trial, stream), so serial and parallel
execution see identical draws.
"""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int]]


def as_key(seed: SeedLike) -> tuple[int, ...]:
    """Normalize a seed (int or sequence of ints) to a tuple of non-negative ints."""
    if isinstance(seed, (int, np.integer)):
        key = (int(seed),)
    else:
        key = tuple(int(s) for s in seed)
    if not key or any(s < 0 for s in key):
        raise ValueError(f"seed key must be non-empty and non-negative, got {seed!r}")
    return key


def generator(seed: SeedLike) -> np.random.Generator:
    """PCG64 generator for the given key. Same key, same stream, any platform."""
    return np.random.default_rng(as_key(seed))


def scalar_seed(seed: SeedLike) -> int:
    """Collapse a key to a single reproducible 64-bit value (for reporting)."""
    return int(np.random.SeedSequence(as_key(seed)).generate_state(1, np.uint64)[0])
