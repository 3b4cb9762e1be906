"""
Seeded generators. Every random draw in a run flows from one integer seed;
independent streams (per method, per split) are derived from it, never from
ambient entropy.
"""

import zlib

import numpy as np


def as_generator(seed_or_rng):
    """numpy Generator from an int seed, or the Generator itself"""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    if seed_or_rng is None:
        raise ValueError("a seed is required; runs never draw from ambient entropy")
    return np.random.default_rng(int(seed_or_rng))


def derive_seed(seed, label):
    """Stable child seed for a named stream (e.g. a method name)"""
    sequence = np.random.SeedSequence([int(seed), zlib.crc32(str(label).encode('utf-8'))])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def derive_generator(seed, label):
    return np.random.default_rng(derive_seed(seed, label))
