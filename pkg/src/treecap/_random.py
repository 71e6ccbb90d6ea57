from __future__ import annotations

import numpy as np

# Stream tags keep generators that share a user seed statistically independent.
PLACEMENT = 1
PERMUTATION = 2
CLASSES = 3
DISTANCE_RATE = 4
MULTI_DESTINATION = 5
RELAY = 6


def rng(seed: int, *keys: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))
