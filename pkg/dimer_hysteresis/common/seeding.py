"""Counter-based random streams

Every stochastic step draws from its own stream keyed by the run seed and a
tuple of integers (scan index, purpose), so the numbers a job sees do not
depend on which worker runs it or in which order.
"""

from typing import Union

import numpy as np

# Purpose keys, appended to the scan index in the spawn key
SAMPLE_STREAM = 0
MICROCANONICAL_STREAM = 1

SEED_MASK = (1 << 64) - 1


def rng_stream(seed: int, *keys: Union[int, np.integer]) -> np.random.Generator:
    """Return a Philox generator for (seed, keys)"""
    if seed is None:
        raise ValueError("A seed is mandatory for stochastic steps")
    sequence = np.random.SeedSequence(
        int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in keys)
    )
    return np.random.Generator(np.random.Philox(sequence))
