"""Seeded random streams.

Every random draw in the package comes from a generator obtained here.  A root
seed is combined with a stream name and integer indices (trial number, grid
point, ...) through ``numpy.random.SeedSequence`` spawn keys, and the resulting
sequence feeds a counter-based Philox bit generator.  Two streams with
different names or indices are statistically independent, and the same
(seed, name, indices) always reproduces the same draws.
"""

from __future__ import annotations

import numpy as np

STREAMS = {
    "generation": 1,
    "decimation": 2,
    "permutation": 3,
    "sampling": 4,
}


def stream(seed: int, name: str, *indices: int) -> np.random.Generator:
    if name not in STREAMS:
        raise KeyError(f"unknown stream {name!r}; expected one of {sorted(STREAMS)}")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = (STREAMS[name],) + tuple(int(i) for i in indices)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))
