"""Counter-based random streams.

Every draw is addressed by ``(seed, trial, stream)``: the seed is the Philox
key and the rest goes into the counter, so a trial's randomness does not depend
on which worker runs it or in what order.
"""

from __future__ import annotations

import numpy as np

STREAM_MESSAGE = 0
STREAM_ERASURE = 1  # + receiver index
DOMAIN_TRIAL = 0
DOMAIN_CODE = 1

_MASK64 = (1 << 64) - 1


def stream(seed: int, trial: int = 0, stream_id: int = 0, domain: int = DOMAIN_TRIAL) -> np.random.Generator:
    key = int(seed) & _MASK64
    counter = np.array([0, trial, stream_id, domain], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def random_bits(gen: np.random.Generator, size: int) -> np.ndarray:
    return gen.integers(0, 2, size=size, dtype=np.uint8)


def erasure_mask(gen: np.random.Generator, size: int, eps: float) -> np.ndarray:
    if eps <= 0:
        return np.zeros(size, dtype=np.uint8)
    return (gen.random(size) < eps).astype(np.uint8)
