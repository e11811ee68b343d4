"""Deterministic RNG stream derivation.

Every random draw in the package comes from a generator derived from a root
seed plus an explicit integer path, so identical seeds replay bit-identically
and independent parts of a run never share a stream.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _encode(part) -> int:
    if isinstance(part, str):
        # Stable string-to-int tag; hash() is salted per process, so fold bytes.
        acc = 0
        for b in part.encode():
            acc = (acc * 257 + b + 1) & _MASK64
        return acc
    return int(part) & _MASK64


def _flatten(seed) -> list[int]:
    if isinstance(seed, (list, tuple)):
        out: list[int] = []
        for part in seed:
            out.extend(_flatten(part))
        return out
    return [_encode(seed)]


def substream(seed, *path) -> np.random.Generator:
    """Generator for the stream identified by (seed, *path).

    `seed` may be an int or a previously derived seed path (list of ints).
    """
    entropy = _flatten(seed) + [_encode(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def subseed(seed, *path) -> list[int]:
    """Derived seed value usable wherever an independent root seed is needed."""
    return _flatten(seed) + [_encode(p) for p in path]
