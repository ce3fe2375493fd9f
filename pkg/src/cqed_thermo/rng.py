"""Per-trajectory random streams.

Trajectory k of an ensemble seeded with ``master_seed`` draws from a Philox
(counter-based) generator keyed by ``SeedSequence(master_seed, spawn_key=(k,))``.
Streams are independent of execution order and can be replayed one at a time.
"""

import numpy as np


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    if master_seed < 0 or index < 0:
        raise ValueError("seed and stream index must be non-negative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seq))
