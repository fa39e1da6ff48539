"""Counter-based pseudo-randomness used for masks, channels and trial seeds.

Everything stochastic in this package is derived by hashing integer tuples
(master seed, stream tag, indices...) through a splitmix64-style finalizer.
That keeps every draw addressable: the value attached to (edge, iteration)
or (code, trial) never depends on how many draws happened before it, which
is what makes runs replayable and independent of worker count.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z = (z + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _M1) & _MASK64
    z = ((z ^ (z >> 27)) * _M2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *parts: int) -> int:
    """Hash (seed, parts...) into a new 64-bit seed.

    Stable across platforms and insensitive to call order elsewhere.
    """
    h = mix64(seed & _MASK64)
    for p in parts:
        h = mix64(h ^ (p & _MASK64))
    return h


def uniform01(seed: int, *parts: int) -> float:
    """One U[0,1) value addressed by (seed, parts...)."""
    return derive_seed(seed, *parts) / 2.0**64


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed_array(seeds, *parts) -> np.ndarray:
    """Vectorized derive_seed over an array of base seeds.

    Elementwise identical to ``derive_seed(int(s), *parts)``; the parts may
    be scalars or broadcastable index arrays.
    """
    h = _mix64_array(np.asarray(seeds, dtype=np.uint64))
    for p in parts:
        h = _mix64_array(h ^ np.asarray(p, dtype=np.uint64))
    return h


def uniform01_array(seed, *parts) -> np.ndarray:
    """Vectorized uniform01 over broadcastable index arrays.

    Replicates the scalar chain h = mix64(seed); h = mix64(h ^ p) per part,
    so uniform01_array(s, e, t)[i, j] == uniform01(s, e[i, 0], t[0, j]) for
    broadcast-shaped index arrays.  seed itself may be an array of seeds.
    """
    if np.isscalar(seed) or isinstance(seed, int):
        h = np.uint64(mix64(int(seed) & _MASK64))
    else:
        h = _mix64_array(np.asarray(seed, dtype=np.uint64))
    for p in parts:
        h = _mix64_array(h ^ np.asarray(p, dtype=np.uint64))
    return h / np.float64(2.0**64)
