"""
Deterministic random streams.

All randomness goes through counter-based Philox generators keyed by a
(seed, stream) pair, so any stream can be reproduced independently of the
order in which streams are consumed.
"""

import numpy as np

_UINT64_MASK = (1 << 64) - 1


def stream(seed: int, *path: int) -> np.random.Generator:
    """
    Return a generator for the stream identified by ``seed`` and ``path``.

    Args:
        seed: Experiment seed
        *path: Stream coordinates, e.g. (purpose, index)

    Returns:
        Independent numpy Generator backed by Philox
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    words = np.random.SeedSequence([seed & _UINT64_MASK, *path]).generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=words))


# stream purposes
INIT = 1
EPOCH = 2
TRACKLET = 3
BENCHMARK = 4
GRADCHECK = 5
