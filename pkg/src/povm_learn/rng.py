"""Named, counter-based random streams.

Every stochastic step draws from a stream identified by ``(seed, name, index)``.
Streams are Philox generators keyed by a hash of that triple, so the numbers a
trial sees depend only on its own index, never on scheduling order::

    rng = stream(seed, "dataset", trial)

Stream names used by the experiment harness:

``dataset``   atom / label draws and register preparation
``measure``   Born-rule outcome draws
``channel``   classical post-processing draws
``sign``      Rademacher signs
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def stream_key(seed: int, name: str, index: int = 0) -> np.ndarray:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [seed & MASK64, seed >> 64, zlib.crc32(name.encode()), int(index)]
    return np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)


def stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Return the generator for one named substream."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, name, index)))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.Generator(np.random.Philox(rng))
    raise TypeError(f"cannot make a random generator from {type(rng).__name__}")
