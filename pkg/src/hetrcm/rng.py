"""Counter-based random numbers keyed by (seed, stream, index, ...).

Every variate is a pure function of its key, so results do not depend on
evaluation order, chunking or the number of worker processes.  The mixing
function is the splitmix64 finalizer applied once per key component.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_S12 = np.uint64(12)

SEED_MAX = 2**64 - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@lru_cache(maxsize=None)
def stream_code(stream: str) -> np.uint64:
    digest = hashlib.blake2b(stream.encode(), digest_size=8).digest()
    return np.uint64(int.from_bytes(digest, "little"))


def _as_u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype != np.uint64:
        arr = arr.astype(np.uint64)
    return arr


def hash64(seed, stream: str, *indices) -> np.ndarray:
    """64-bit hash of the key; all arguments broadcast against each other."""
    with np.errstate(over="ignore"):
        h = _mix(_mix(_as_u64(seed) + _GOLDEN) ^ stream_code(stream))
        for idx in indices:
            h = _mix(h ^ (_as_u64(idx) * _GOLDEN + _GOLDEN))
    return h


def to_unit(h: np.ndarray) -> np.ndarray:
    """Map 64-bit hashes to doubles strictly inside (0, 1).

    The top 52 bits give k/2^52; the half-step offset keeps both ends open
    (with 53 bits the largest value would round up to exactly 1.0).
    """
    return ((h >> _S12).astype(np.float64) + 0.5) * 2.0**-52


def uniform(seed, stream: str, *indices) -> np.ndarray:
    return to_unit(hash64(seed, stream, *indices))


def derive_seed(seed: int, stream: str, *indices: int) -> int:
    """Child seed for an independent sub-experiment (e.g. one replica)."""
    return int(hash64(np.uint64(seed), stream, *[np.uint64(i) for i in indices]))


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return seed
