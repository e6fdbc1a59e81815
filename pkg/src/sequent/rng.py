"""Seeded, counter-based random streams.

Every consumer draws from its own Philox stream keyed by ``(seed, purpose)``,
so adding a draw in one place never shifts the numbers seen elsewhere.
"""

from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed: int, purpose: str) -> np.random.Generator:
    if seed is None or int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    entropy = [int(seed), zlib.crc32(purpose.encode())]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
