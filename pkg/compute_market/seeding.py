"""Splittable seeded random streams.

Each generated entity draws from its own stream keyed by (seed, kind, index), so adding
an entity of one kind never shifts the draws of another.
"""
import zlib

import numpy as np


def stream(seed: int, kind: str, index: int = 0) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFF, zlib.crc32(kind.encode("utf-8")), int(index)]
    return np.random.default_rng(np.random.SeedSequence(entropy))
