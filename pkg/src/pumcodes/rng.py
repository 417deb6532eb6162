"""Counter-based random streams.

Every trial owns a 64-bit seed derived from the master seed and the trial
index, and every draw inside a trial is a hash of (seed, draw index).  The
result of trial ``i`` therefore does not depend on which worker ran it or
in what order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(x) -> np.ndarray:
    """splitmix64 finalizer, elementwise on uint64 arrays (wrapping arithmetic)."""
    z = np.array(x, dtype=np.uint64, copy=True, ndmin=1)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def trial_seeds(master_seed: int, start: int, count: int) -> np.ndarray:
    """Seeds of trials ``start .. start+count-1``."""
    base = mix64(np.uint64(master_seed & MASK64))
    idx = np.arange(start, start + count, dtype=np.uint64)
    return mix64(base + (idx + np.uint64(1)) * GOLDEN)


def trial_seed(master_seed: int, index: int) -> int:
    return int(trial_seeds(master_seed, index, 1)[0])


def uniforms(seeds, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1) per seed; shape ``(len(seeds), count)``."""
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
    steps = (np.arange(count, dtype=np.uint64) + np.uint64(1)) * GOLDEN
    bits = mix64(seeds + steps[None, :]).reshape(seeds.shape[0], count)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
