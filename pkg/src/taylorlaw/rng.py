"""Seeded, counter-based random streams.

Every random quantity in the library is drawn from a Philox generator keyed by
``(seed, *keys)``. Keys are typically a replicate id, optionally followed by a
purpose tag, so replicates can be computed in any order or on any number of
threads and still reproduce bit-for-bit.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def substream(seed, *keys):
    """Return an independent ``numpy.random.Generator`` for ``(seed, *keys)``."""
    if seed is None:
        raise TypeError("seed must be an integer")
    seq = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) & MASK64 for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def tag(name):
    """Stable 32-bit integer for a purpose tag, usable as a substream key."""
    h = 2166136261
    for ch in name.encode():
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h
