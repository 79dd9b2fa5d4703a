"""Insertion-only EMD estimation via a k-median coreset of one side.

The stream's S side is compressed into a weighted representative set whose
defining guarantee is bounded total movement: summed over all points, the
weighted Euclidean distance between a point and its representative stays
below the epsilon budget times a k-median cost certificate.  The T side
(at most k distinct points) is kept exactly.  The estimate is the exact
transportation cost between the representatives and T.

Compression of a full bucket works in two steps: seed an over-provisioned
center set by weighted D^2 sampling (a bicriteria k-median approximation),
then snap every point to a lattice around its nearest center whose pitch
scales with epsilon times the point's distance ring.  Points sharing a
lattice cell collapse into one representative carrying their summed
weight, so weights stay integral while coordinates may leave the integer
grid.  Buckets are combined by the usual fan-in-2 merge-and-reduce ladder,
with the level-L reduce running at budget epsilon / (2 L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._mix import derive_key
from .errors import (
    ConfigError,
    DeletionUnsupported,
    DistinctBoundExceeded,
    SizeMismatch,
)
from .exact import exact_emd, l2_distance
from .geometry import Point, StreamUpdate, WeightedPointSet, validate_update

#: Snap pitch is epsilon * 2**floor(log2(r)) / SNAP_DIVISOR for a point at
#: distance r from its center; keeps per-point movement below
#: epsilon * r * sqrt(2) / (2 * SNAP_DIVISOR).
SNAP_DIVISOR = 8


@dataclass(frozen=True)
class CoresetConfig:
    k: int
    epsilon: float
    delta: int
    bucket_size: int | None = None
    fan_in: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.fan_in < 2:
            raise ConfigError(f"fan-in must be >= 2, got {self.fan_in}")

    @property
    def resolved_bucket_size(self) -> int:
        if self.bucket_size is not None:
            return self.bucket_size
        return max(64, math.ceil(4 * self.k / self.epsilon**2))


@dataclass
class ReduceRecord:
    tree_level: int
    input_points: int
    output_points: int
    movement: float
    seeding_cost: float


def _seed_centers(pts: np.ndarray, weights: np.ndarray, n_centers: int, rng):
    """Weighted D^2 sampling; returns (center indices, nearest-center map)."""
    m = len(pts)
    probs = weights / weights.sum()
    first = int(rng.choice(m, p=probs))
    chosen = [first]
    diff = pts - pts[first]
    d2 = np.einsum("ij,ij->i", diff, diff)
    nearest = np.zeros(m, dtype=np.int64)
    while len(chosen) < n_centers:
        mass = weights * d2
        total = mass.sum()
        if total <= 0:
            break
        idx = int(rng.choice(m, p=mass / total))
        chosen.append(idx)
        diff = pts - pts[idx]
        cand = np.einsum("ij,ij->i", diff, diff)
        closer = cand < d2
        d2[closer] = cand[closer]
        nearest[closer] = len(chosen) - 1
    return chosen, nearest, np.sqrt(d2)


def reduce_bucket(
    bucket: WeightedPointSet, k: int, epsilon: float, rng
) -> tuple[WeightedPointSet, float, float]:
    """Compress one bucket; returns (representatives, movement, seeding cost).

    Movement is the weighted Euclidean displacement summed over the
    bucket; by construction it stays below epsilon * seeding_cost / 11,
    and the seeding cost itself upper-bounds the bucket's optimal k-median
    cost times the bicriteria factor.
    """
    if not len(bucket):
        raise ConfigError("cannot reduce an empty bucket")
    items = sorted(bucket.items())
    total = bucket.total_weight
    n_centers = min(len(items), max(k, math.ceil(8 * k * math.log2(max(2, total)))))
    if len(items) <= n_centers:
        return bucket.copy(), 0.0, 0.0

    pts = np.array([p for p, _ in items], dtype=np.float64)
    weights = np.array([w for _, w in items], dtype=np.float64)
    chosen, nearest, radii = _seed_centers(pts, weights, n_centers, rng)
    seeding_cost = float(np.dot(weights, radii))

    centers = pts[chosen]
    anchors = centers[nearest]
    reps = WeightedPointSet()
    movement = 0.0
    for idx, (point, w) in enumerate(items):
        r = radii[idx]
        if r == 0.0:
            reps.add(point, w)
            continue
        pitch = epsilon * 2.0 ** math.floor(math.log2(r)) / SNAP_DIVISOR
        ax, ay = anchors[idx]
        qx = ax + round((point[0] - ax) / pitch) * pitch
        qy = ay + round((point[1] - ay) / pitch) * pitch
        movement += w * math.hypot(point[0] - qx, point[1] - qy)
        reps.add((qx, qy), w)
    return reps, movement, seeding_cost


class StreamingCoreset:
    """Insertion-only stream state: S compressed, T exact, estimate via EMD."""

    def __init__(self, config: CoresetConfig):
        self.config = config
        self._buffer: list = []
        self._ladder: dict[int, list[WeightedPointSet]] = {}
        self._t_store = WeightedPointSet()
        self._n_s = 0
        self.movement = 0.0
        self.reduce_log: list[ReduceRecord] = []
        self._reduce_counter = 0

    @property
    def n_s(self) -> int:
        return self._n_s

    @property
    def n_t(self) -> int:
        return self._t_store.total_weight

    def insert(self, side: str, point: Point) -> None:
        if side == "T":
            if point not in self._t_store and self._t_store.distinct >= self.config.k:
                raise DistinctBoundExceeded(
                    f"T already holds {self.config.k} distinct points"
                )
            self._t_store.add(point, 1)
            return
        if side != "S":
            raise ConfigError(f"side must be 'S' or 'T', got {side!r}")
        self._buffer.append(point)
        self._n_s += 1
        if len(self._buffer) >= self.config.resolved_bucket_size:
            self._flush()

    def apply(self, u: StreamUpdate) -> None:
        validate_update(u, self.config.delta)
        if u.sign < 0:
            raise DeletionUnsupported("the coreset estimator is insertion-only")
        for _ in range(u.count):
            self.insert(u.side, u.point)

    def _flush(self) -> None:
        node = WeightedPointSet.from_points(self._buffer)
        self._buffer = []
        level = 0
        while len(self._ladder.get(level, ())) + 1 >= self.config.fan_in:
            merged = node
            for sibling in self._ladder.pop(level):
                for p, w in sibling.items():
                    merged.add(p, w)
            level += 1
            node = self._reduce(merged, level)
        self._ladder.setdefault(level, []).append(node)

    def _reduce(self, bucket: WeightedPointSet, tree_level: int) -> WeightedPointSet:
        budget = self.config.epsilon / (2 * tree_level)
        rng = np.random.default_rng(
            derive_key(self.config.seed, "reduce", self._reduce_counter)
        )
        self._reduce_counter += 1
        reps, moved, seeding_cost = reduce_bucket(bucket, self.config.k, budget, rng)
        self.movement += moved
        self.reduce_log.append(
            ReduceRecord(tree_level, len(bucket), len(reps), moved, seeding_cost)
        )
        return reps

    def core(self) -> WeightedPointSet:
        out = WeightedPointSet.from_points(self._buffer)
        for buckets in self._ladder.values():
            for bucket in buckets:
                for p, w in bucket.items():
                    out.add(p, w)
        return out

    def t_points(self) -> WeightedPointSet:
        return self._t_store.copy()

    def certificate(self) -> float:
        """Certified upper bound on the optimal k-median cost of raw S.

        The distance sum from the representatives to T bounds the raw sum
        within the accumulated movement, and the raw sum itself bounds the
        optimal cost because T is one candidate center set.
        """
        if not len(self._t_store):
            return math.inf
        targets = list(self._t_store.points())
        rep_cost = sum(
            w * min(l2_distance(p, t) for t in targets)
            for p, w in self.core().items()
        )
        return rep_cost + self.movement

    def estimate(self) -> float:
        if self._n_s != self.n_t:
            raise SizeMismatch(f"|S| = {self._n_s} but |T| = {self.n_t}")
        return exact_emd(self.core(), self._t_store).cost
