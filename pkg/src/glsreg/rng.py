"""Deterministic random-number streams.

All randomness in the package flows through counter-based Philox
generators keyed as (root_seed, stream_index), so every replicate,
resample or restart has its own named substream and results are
independent of evaluation order and thread count.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int) -> np.random.Generator:
    """Generator for substream ``index`` of root seed ``seed``."""
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def spawn_seeds(seed: int, n: int, index: int = 0) -> np.ndarray:
    """Block of ``n`` independent 63-bit child seeds.

    Drawn from substream ``index`` of the root seed; child ``i`` is the
    i-th entry, so the mapping (seed, index, i) -> child seed is stable.
    """
    return stream(seed, index).integers(0, 1 << 63, size=n, dtype=np.int64)
