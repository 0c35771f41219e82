"""Deterministic random streams.

All stochastic parts of the pipeline draw from PCG64 generators keyed by
(master seed, stream path).  Two runs with the same seed therefore consume
identical randomness regardless of scheduling or evaluation order, and
independent components (e.g. the trees of a forest) get decorrelated
streams without sharing state.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _as_entropy(part: int | str) -> int:
    if isinstance(part, int):
        if part < 0:
            raise ValueError("stream path integers must be non-negative")
        return part
    digest = hashlib.sha256(part.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Return a generator keyed by ``seed`` and a path of ints/strings."""
    entropy = [_as_entropy(seed)] + [_as_entropy(p) for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
