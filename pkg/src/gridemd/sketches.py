"""Turnstile linear sketches for l1 norms and distinct counts.

The l1 sketch projects the (conceptual, never materialized) update vector
onto rows of heavy-tailed stable-law coefficients and reads the norm off
the median of the absolute row values.  Coefficients are generated on
demand from a 64-bit key in counter mode (splitmix64 chain, inverse-CDF
transform tan(pi*(u - 1/2)), tails clipped at the 2**-40 quantile) and
quantized to multiples of 2**-10.  Accumulators hold the quantized values
as int64, so sketch states form an exact integer vector space: updates
commute, merge is addition, and matched insert/delete pairs cancel to the
bit.  The scale envelope (|count| chunked at 2**13 per add, coefficients
below 2**50) keeps ordinary workloads far from int64 wraparound.

The distinct-count sketch keeps exact net counts per retained coordinate,
where a coordinate is retained at sampling level L when its keyed hash has
at least L leading zero bits.  A level is over capacity when more than
`capacity` retained coordinates have nonzero net count; the estimate reads
the lowest level within capacity, scaled by 2**level.  Overflow is a
function of the current state, never sticky, so deletions restore earlier
estimates exactly.

Serialized form (little-endian, documented here for checkpoint tooling):

    l1:  u32 payload length | magic 'L1' | u8 version=1 |
         f64 epsilon | f64 delta | u64 key | u64 dimension (0 = unset) |
         u32 rows | rows * i64 accumulators
    l0:  u32 payload length | magic 'L0' | u8 version=1 |
         f64 epsilon | f64 delta | u64 key | u32 capacity |
         u32 entries | entries * (u64 coordinate, i64 net count)
"""

from __future__ import annotations

import math
import struct
from statistics import NormalDist

import numpy as np

from ._mix import mix2, splitmix64_vec
from .errors import AllLevelsOverflowed, ConfigError

#: Median of the absolute value of the standard Cauchy law, the estimator's
#: divisor.  Analytically tan(pi/4) = 1; scripts/calibrate_l1.py re-measures
#: it over 1e6 generated coefficients (quantization shifts it by < 1e-3).
L1_CALIBRATION = 1.0

#: Fixed-point scale of quantized projection coefficients.
COEFF_SCALE = 1024  # 2**10

#: Tails of the coefficient law are clipped at this quantile.
TAIL_QUANTILE = 2.0**-40

#: Updates are folded in chunks of this count so every per-row product
#: stays well inside int64.
_CHUNK = 1 << 13

_U11 = np.uint64(11)
_GOLDEN = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF


def l1_rows(epsilon: float, delta: float) -> int:
    """Accumulator rows needed for a (1 +- epsilon) estimate w.p. 1 - delta.

    Inverts the normal approximation of the sample-median tail around the
    absolute-Cauchy quantiles at 1 -+ epsilon, split evenly across the two
    sides, with a 1.3 safety factor on top.  Always odd.
    """
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise ConfigError(f"epsilon and delta must lie in (0, 1)")
    z = NormalDist().inv_cdf(1 - delta / 2)
    needed = 0.0
    for q in (1 - epsilon, 1 + epsilon):
        p = (2 / math.pi) * math.atan(q)
        needed = max(needed, p * (1 - p) * z * z / (p - 0.5) ** 2)
    return max(17, math.ceil(1.3 * needed) | 1)


def l0_capacity(epsilon: float, delta: float) -> int:
    """Retained-coordinate budget per sampling level."""
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise ConfigError(f"epsilon and delta must lie in (0, 1)")
    return math.ceil(12 * math.log(2 / delta) / epsilon**2)


def projection_coefficients(key: int, coord: int, rows: int) -> np.ndarray:
    """Quantized stable-law row coefficients for one coordinate (int64)."""
    base = np.uint64(mix2(key, coord))
    counters = np.arange(1, rows + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
    z = splitmix64_vec(base + counters)
    u = ((z >> _U11).astype(np.float64) + 0.5) * 2.0**-53
    np.clip(u, TAIL_QUANTILE, 1.0 - TAIL_QUANTILE, out=u)
    c = np.tan(np.pi * (u - 0.5))
    return np.rint(c * COEFF_SCALE).astype(np.int64)


class L1Sketch:
    """Linear sketch estimating the l1 norm of a turnstile update vector."""

    __slots__ = ("epsilon", "delta", "key", "rows", "dimension", "_acc")

    def __init__(
        self,
        epsilon: float = 0.1,
        delta: float = 0.05,
        key: int = 0,
        rows: int | None = None,
        dimension: int | None = None,
    ):
        self.epsilon = epsilon
        self.delta = delta
        self.key = key & _MASK
        self.rows = rows if rows is not None else l1_rows(epsilon, delta)
        self.dimension = dimension
        self._acc = np.zeros(self.rows, dtype=np.int64)

    def update(self, coord: int, delta: int) -> None:
        if coord < 0:
            raise ConfigError(f"coordinate must be nonnegative, got {coord}")
        if self.dimension is not None and coord >= self.dimension:
            raise ConfigError(f"coordinate {coord} >= dimension {self.dimension}")
        if delta == 0:
            return
        coeffs = projection_coefficients(self.key, coord, self.rows)
        remaining = delta
        while remaining:
            step = max(-_CHUNK, min(_CHUNK, remaining))
            self._acc += coeffs * step
            remaining -= step

    def estimate(self) -> float:
        if not self._acc.any():
            return 0.0
        med = float(np.median(np.abs(self._acc)))
        return med / COEFF_SCALE / L1_CALIBRATION

    def merge(self, other: "L1Sketch") -> "L1Sketch":
        self._check_compatible(other)
        out = L1Sketch(self.epsilon, self.delta, self.key, self.rows, self.dimension)
        out._acc = self._acc + other._acc
        return out

    __add__ = merge

    def copy(self) -> "L1Sketch":
        out = L1Sketch(self.epsilon, self.delta, self.key, self.rows, self.dimension)
        out._acc = self._acc.copy()
        return out

    def _check_compatible(self, other: "L1Sketch") -> None:
        if (self.key, self.rows, self.epsilon, self.delta) != (
            other.key,
            other.rows,
            other.epsilon,
            other.delta,
        ):
            raise ConfigError("cannot merge sketches with different keys or shapes")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, L1Sketch)
            and self.key == other.key
            and self.rows == other.rows
            and self.epsilon == other.epsilon
            and self.delta == other.delta
            and bool(np.array_equal(self._acc, other._acc))
        )

    def to_bytes(self) -> bytes:
        payload = struct.pack(
            "<2sBddQQI",
            b"L1",
            1,
            self.epsilon,
            self.delta,
            self.key,
            self.dimension or 0,
            self.rows,
        )
        payload += self._acc.tobytes()
        return struct.pack("<I", len(payload)) + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "L1Sketch":
        (length,) = struct.unpack_from("<I", blob)
        payload = blob[4 : 4 + length]
        magic, version, eps, dlt, key, dim, rows = struct.unpack_from("<2sBddQQI", payload)
        if magic != b"L1" or version != 1:
            raise ConfigError(f"not a version-1 l1 sketch blob")
        sk = cls(eps, dlt, key, rows, dim or None)
        head = struct.calcsize("<2sBddQQI")
        sk._acc = np.frombuffer(payload[head:], dtype=np.int64).copy()
        if sk._acc.shape != (rows,):
            raise ConfigError("truncated l1 sketch blob")
        return sk

    def __repr__(self) -> str:
        return f"L1Sketch(rows={self.rows}, key={self.key:#x})"


def _leading_zeros(key: int, coord: int) -> int:
    return 64 - mix2(key, coord).bit_length()


class L0Sketch:
    """Level-sampling distinct-count sketch tolerating deletions."""

    __slots__ = ("epsilon", "delta", "key", "capacity", "_net", "_level_counts")

    def __init__(
        self,
        epsilon: float = 0.1,
        delta: float = 0.05,
        key: int = 0,
        capacity: int | None = None,
    ):
        self.epsilon = epsilon
        self.delta = delta
        self.key = key & _MASK
        self.capacity = capacity if capacity is not None else l0_capacity(epsilon, delta)
        self._net: dict[int, int] = {}
        # _level_counts[z] = nonzero-net coordinates whose hash has exactly
        # z leading zero bits; level-L support is the suffix sum from L.
        self._level_counts = [0] * 65

    def update(self, coord: int, delta: int) -> None:
        if coord < 0:
            raise ConfigError(f"coordinate must be nonnegative, got {coord}")
        if delta == 0:
            return
        old = self._net.get(coord, 0)
        new = old + delta
        if new:
            self._net[coord] = new
        else:
            del self._net[coord]
        if (old == 0) != (new == 0):
            z = _leading_zeros(self.key, coord)
            self._level_counts[z] += 1 if old == 0 else -1

    def estimate(self) -> int:
        support = 0
        best = None
        for z in range(64, -1, -1):
            support += self._level_counts[z]
            if support <= self.capacity:
                best = support << z
        if best is None:
            raise AllLevelsOverflowed(
                f"support exceeds capacity {self.capacity} at every level"
            )
        return best

    def merge(self, other: "L0Sketch") -> "L0Sketch":
        if (self.key, self.capacity) != (other.key, other.capacity):
            raise ConfigError("cannot merge sketches with different keys or capacity")
        out = self.copy()
        for coord, net in other._net.items():
            out.update(coord, net)
        return out

    __add__ = merge

    def copy(self) -> "L0Sketch":
        out = L0Sketch(self.epsilon, self.delta, self.key, self.capacity)
        out._net = dict(self._net)
        out._level_counts = list(self._level_counts)
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, L0Sketch)
            and self.key == other.key
            and self.capacity == other.capacity
            and self._net == other._net
        )

    def to_bytes(self) -> bytes:
        payload = struct.pack(
            "<2sBddQII",
            b"L0",
            1,
            self.epsilon,
            self.delta,
            self.key,
            self.capacity,
            len(self._net),
        )
        for coord in sorted(self._net):
            payload += struct.pack("<Qq", coord, self._net[coord])
        return struct.pack("<I", len(payload)) + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "L0Sketch":
        (length,) = struct.unpack_from("<I", blob)
        payload = blob[4 : 4 + length]
        magic, version, eps, dlt, key, cap, entries = struct.unpack_from(
            "<2sBddQII", payload
        )
        if magic != b"L0" or version != 1:
            raise ConfigError(f"not a version-1 l0 sketch blob")
        sk = cls(eps, dlt, key, cap)
        offset = struct.calcsize("<2sBddQII")
        for _ in range(entries):
            coord, net = struct.unpack_from("<Qq", payload, offset)
            offset += 16
            sk.update(coord, net)
        return sk

    def __repr__(self) -> str:
        return f"L0Sketch(capacity={self.capacity}, tracked={len(self._net)})"


def estimate_within(estimate: float, truth: float, epsilon: float) -> bool:
    """Convenience predicate for envelope tests."""
    return (1 - epsilon) * truth <= estimate <= (1 + epsilon) * truth
