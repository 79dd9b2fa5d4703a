"""Deterministic keyed hashing used by the sketches.

All sketch randomness is derived on demand from 64-bit keys with a
splitmix64-style finalizer, in counter mode, so that nothing beyond the key
has to be stored and replays are bit-identical across runs and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(_GOLDEN)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)


def splitmix64(x: int) -> int:
    """Finalize one 64-bit value (scalar counterpart of the vector path)."""
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def splitmix64_vec(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 over a uint64 array."""
    z = x + _U_GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _U_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U_MIX2
    return z ^ (z >> np.uint64(31))


def mix2(key: int, x: int) -> int:
    """Hash a 64-bit value under a 64-bit key."""
    return splitmix64(splitmix64((key + x * _GOLDEN) & _MASK))


def derive_key(*parts: int | str | bytes) -> int:
    """Derive a 64-bit subkey from heterogeneous parts via BLAKE2b.

    Used once per sketch at construction time; the hot per-update path
    sticks to the integer mixers above.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bytes):
            data = part
        elif isinstance(part, str):
            data = part.encode()
        else:
            data = int(part).to_bytes(16, "little", signed=True)
        h.update(len(data).to_bytes(2, "little"))
        h.update(data)
    return int.from_bytes(h.digest(), "little")
