"""Seeding helpers built on numpy's counter-based Philox generator.

Replicate ``k`` of a run seeded with ``s`` always draws from the stream
``SeedSequence(s, spawn_key=(k,))``, so replicates can be produced in any
order, or in parallel, without changing their random numbers.
"""

from __future__ import annotations

import numpy as np

__all__ = ["generator", "replicate_generator", "replicate_generators", "stream"]

# spawn-key prefixes that keep the streams used by different roles apart
STREAMS = {"main": 0, "replicate": 1, "lanczos": 2, "oracle": 3, "duel": 4}


def _seed_sequence(seed, key=()):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    if seed is None:
        raise ValueError("a seed is required for reproducible runs")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(key))


def generator(seed) -> np.random.Generator:
    """Philox generator for ``seed`` (an int or a SeedSequence)."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed)))


def stream(seed, role: str, *index: int) -> np.random.Generator:
    """Generator for a named role, e.g. ``stream(1, "duel", 0)``."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, (STREAMS[role],) + index)))


def replicate_generator(seed, k: int) -> np.random.Generator:
    return stream(seed, "replicate", int(k))


def replicate_generators(seed, n: int) -> list[np.random.Generator]:
    return [replicate_generator(seed, k) for k in range(n)]
