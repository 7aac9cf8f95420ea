"""Deterministic, counter-based random streams.

A stream is fully determined by ``(master_seed, stream_id)``; the id may be a
tuple so callers can key streams by role, point and trial block without
coordinating integer ranges.
"""

from __future__ import annotations

import numpy as np

# Stream roles. Part of the stream key, so changing them changes results.
DATA = 1
NOISE = 2
CHANNEL = 3
INTERLEAVER = 4


def spawn_stream(master_seed: int, *stream_id: int) -> np.random.Generator:
    """Return a Philox generator keyed by the seed and stream id."""
    key = tuple(int(s) & 0xFFFFFFFFFFFFFFFF for s in stream_id) or (0,)
    seq = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian, ``variance / 2`` per component."""
    scale = np.sqrt(variance / 2.0)
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return scale * (z[0] + 1j * z[1])
