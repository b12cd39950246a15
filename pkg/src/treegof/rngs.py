"""Seed handling: counter-based (Philox) streams that can be split per
replicate so that serial and parallel schedules draw identical numbers."""

from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    """Coerce a seed (int, None, SeedSequence or Generator) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def replicate_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for one replicate, derived from a master seed and
    an index path; the derivation is order-insensitive across replicates."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key)))
    )
