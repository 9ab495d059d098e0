"""Deterministic, platform-independent random streams.

Every stochastic operation in the package draws from a counter-based Philox
generator keyed by an integer seed, so identical seeds reproduce identical
bits on any platform and generation can fan out across workers safely.
"""

from __future__ import annotations

import numpy as np

_KEY_MASK = (1 << 128) - 1


def rng_from_seed(seed: int) -> np.random.Generator:
    """Return a Philox generator keyed directly by ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed & _KEY_MASK))


def split_seed(seed: int, n: int) -> list[int]:
    """Derive ``n`` independent 64-bit child seeds from one master seed."""
    ss = np.random.SeedSequence(seed & _KEY_MASK)
    return [int(child.generate_state(1, np.uint64)[0]) for child in ss.spawn(n)]


def frame_seed(master_seed: int, class_id: int, frame_index: int, stream: int = 0) -> int:
    """64-bit splittable hash of (master seed, class, frame index).

    ``stream`` separates independent uses for the same frame (e.g. symbol
    bits vs. channel noise).
    """
    ss = np.random.SeedSequence((master_seed & _KEY_MASK, class_id, frame_index, stream))
    return int(ss.generate_state(1, np.uint64)[0])
