"""Deterministic random streams keyed by (seed, entity, purpose).

Every stochastic component draws from its own stream so that results do not
depend on the order in which households or appliances are processed.
"""

import zlib

import numpy as np

POPULATION = 1
ASSIGNMENT = 2
WEATHER = 3
APPLIANCE = 4
SHOWER = 5
SCENARIO = 6
QUOTA = 7


def key_of(value):
    """Map a string or integer key onto a nonnegative 32-bit integer."""
    if isinstance(value, str):
        return zlib.crc32(value.encode("utf-8"))
    value = int(value)
    if value < 0:
        raise ValueError(f"stream keys must be nonnegative, got {value}")
    return value


def stream(seed, *keys):
    """Return a fresh ``numpy.random.Generator`` for the given key path."""
    entropy = [key_of(seed)] + [key_of(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
