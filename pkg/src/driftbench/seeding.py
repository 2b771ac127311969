"""Deterministic sub-seed derivation.

All randomness in the package flows from a single user seed. Components derive
named child streams so a partial re-run (say, retraining after the second
drift) consumes exactly the same random numbers as the full run.
"""

from __future__ import annotations

import zlib

import numpy as np


def _sequence(seed: int, tags: tuple) -> np.random.SeedSequence:
    keys = [zlib.crc32(str(t).encode("utf-8")) for t in tags]
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *keys])


def rng_for(seed: int, *tags) -> np.random.Generator:
    """Generator for the child stream named by ``tags``."""
    return np.random.default_rng(_sequence(seed, tags))


def seed_for(seed: int, *tags) -> int:
    """A plain integer seed for the child stream named by ``tags``."""
    return int(_sequence(seed, tags).generate_state(1, np.uint64)[0])
