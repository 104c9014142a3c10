"""Counter-based seed derivation.

Every replicate draws from ``SeedSequence(seed, spawn_key=key)`` where ``key``
encodes its position in the experiment, so results never depend on how work
is split between processes.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def child_seed(seed: int, *key: int) -> int:
    """A 64-bit seed for a sub-task, derived without consuming any stream."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
