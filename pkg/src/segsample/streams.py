"""Seeded random streams keyed by (replication, purpose)."""

from __future__ import annotations

import zlib

import numpy as np


def purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def make_rng(seed: int = 0, replication: int = 0, purpose: str = "draw") -> np.random.Generator:
    """Independent PCG64 stream for a (seed, replication, purpose) triple."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication), purpose_key(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(seed_or_rng, purpose: str = "draw") -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rng(0 if seed_or_rng is None else int(seed_or_rng), 0, purpose)


def random_permutations(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """n independent uniform permutations of 0..d-1, one per row."""
    return rng.permuted(np.tile(np.arange(d), (n, 1)), axis=1)
