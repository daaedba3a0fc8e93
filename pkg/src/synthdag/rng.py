"""Seeded random streams.

Every run derives all of its randomness from one root seed.  Independent
subsystems (serialization order, sampling, oracle fallback, corpus splits)
pull named child streams so that adding draws in one subsystem never
perturbs another.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def child_rng(root_seed: int, name: str) -> np.random.Generator:
    """Derive the named child stream of a root seed."""
    return np.random.default_rng(np.random.SeedSequence([root_seed, fnv1a64(name.encode("utf-8"))]))
