"""Grid geometry: points, randomly shifted grids, and per-cell counts.

Points carry integer coordinates in [1, delta] with delta a power of two.
Grid lines sit at half-integral coordinates, so no point is ever on a line
and cell membership is unambiguous.  A level-i grid has cells of side 2**i;
its only degrees of freedom are the two shift residues modulo the cell
size, each of the form m + 1/2.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import NegativeMultiplicity, RangeError


class Point(NamedTuple):
    x: int
    y: int


class CellId(NamedTuple):
    ix: int
    iy: int


class StreamUpdate(NamedTuple):
    """One turnstile event: sign=+1 inserts, sign=-1 deletes `count` copies."""

    side: str  # "S" or "T"
    sign: int
    point: Point
    count: int = 1


#: Largest per-update count accepted by the sketches; keeps fixed-point
#: accumulator products inside 64 bits.
MAX_UPDATE_COUNT = 2**31


def validate_delta(delta: int) -> int:
    if delta < 2 or delta & (delta - 1):
        raise RangeError(f"delta must be a power of two >= 2, got {delta}")
    return delta.bit_length() - 1


def validate_point(p: Point, delta: int) -> None:
    if not (1 <= p[0] <= delta and 1 <= p[1] <= delta):
        raise RangeError(f"point {tuple(p)} outside [1, {delta}]^2")


def validate_update(u: StreamUpdate, delta: int) -> None:
    if u.side not in ("S", "T"):
        raise RangeError(f"update side must be 'S' or 'T', got {u.side!r}")
    if u.sign not in (1, -1):
        raise RangeError(f"update sign must be +1 or -1, got {u.sign!r}")
    if not 1 <= u.count <= MAX_UPDATE_COUNT:
        raise RangeError(f"update count must be in [1, 2^31], got {u.count}")
    validate_point(u.point, delta)


@dataclass(frozen=True)
class GridSpec:
    """A shifted grid at one level.

    `shift` components are half-integral and reduced modulo the cell size,
    so two specs are equal exactly when they induce the same cells.  At
    level 0 the single legal shift is (0.5, 0.5).
    """

    level: int
    shift: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"grid level must be >= 0, got {self.level}")
        for s in self.shift:
            m = s - 0.5
            if m != int(m) or not 0 <= m < self.cell_size:
                raise ValueError(
                    f"shift component {s} not of the form m + 1/2 with "
                    f"0 <= m < {self.cell_size}"
                )

    @property
    def cell_size(self) -> int:
        return 1 << self.level


def random_grid(level: int, rng: random.Random, max_level: int | None = None) -> GridSpec:
    """Draw a uniformly shifted grid at `level` from a seeded generator.

    Both shift residues are drawn independently and uniformly from the
    2**level legal half-integral values.  Level 0 consumes no randomness.
    """
    if level < 0 or (max_level is not None and level > max_level):
        raise ValueError(f"level {level} out of range [0, {max_level}]")
    if level == 0:
        return GridSpec(0)
    size = 1 << level
    return GridSpec(level, (rng.randrange(size) + 0.5, rng.randrange(size) + 0.5))


def cell_of(p: Point, g: GridSpec) -> CellId:
    """Cell index of `p` under `g`, via floor((coord - shift) / cell_size).

    Computed in integer half-units, so the result is exact: 2*coord minus
    the odd number 2*shift can never be a multiple of the doubled cell
    size, which is the no-point-on-a-line guarantee.
    """
    w2 = g.cell_size << 1
    sx2 = int(2 * g.shift[0])
    sy2 = int(2 * g.shift[1])
    return CellId((2 * p[0] - sx2) // w2, (2 * p[1] - sy2) // w2)


def edge_crosses(a: Point, b: Point, g: GridSpec) -> bool:
    """True when `a` and `b` land in different cells of `g`."""
    return cell_of(a, g) != cell_of(b, g)


class SparseCellCounts:
    """Signed per-cell counts of V_G(S) - V_G(T) for one grid.

    Only nonzero entries are kept.  Single-writer: share read-only.
    """

    __slots__ = ("grid", "_counts")

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self._counts: dict[CellId, int] = {}

    def add(self, cell: CellId, delta: int) -> None:
        new = self._counts.get(cell, 0) + delta
        if new:
            self._counts[cell] = new
        else:
            self._counts.pop(cell, None)

    def l1(self) -> int:
        return sum(abs(v) for v in self._counts.values())

    def l0(self) -> int:
        return len(self._counts)

    def items(self) -> Iterator[tuple[CellId, int]]:
        return iter(self._counts.items())

    def as_dict(self) -> dict[CellId, int]:
        return dict(self._counts)

    def __getitem__(self, cell: CellId) -> int:
        return self._counts.get(cell, 0)

    def __len__(self) -> int:
        return len(self._counts)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseCellCounts)
            and self.grid == other.grid
            and self._counts == other._counts
        )

    def __repr__(self) -> str:
        return f"SparseCellCounts(level={self.grid.level}, nonzero={len(self)})"


def apply_update(counts: SparseCellCounts, u: StreamUpdate) -> SparseCellCounts:
    """Fold one turnstile event into V_G(S) - V_G(T).

    S-side mass enters with the update's sign, T-side mass with the
    opposite sign; cancelled entries are dropped.  Mutates and returns
    `counts`.
    """
    direction = u.sign if u.side == "S" else -u.sign
    counts.add(cell_of(u.point, counts.grid), direction * u.count)
    return counts


def cell_counts_of_set(points: Mapping[Point, int] | "WeightedPointSet", grid: GridSpec) -> dict[CellId, int]:
    """Per-cell totals of a single weighted set (dense test oracle)."""
    out: dict[CellId, int] = {}
    items = points.items()
    for p, w in items:
        c = cell_of(p, grid)
        out[c] = out.get(c, 0) + w
    return {c: v for c, v in out.items() if v}


class WeightedPointSet:
    """Multiset of plane points with positive weights.

    Stream-side sets carry integer weights at integer coordinates; coreset
    output may carry real coordinates (weights stay integral because
    snapping only regroups points).  Zero-weight entries are dropped;
    driving a weight negative raises.
    """

    __slots__ = ("_weights", "_total")

    def __init__(self, weights: Mapping | Iterable[tuple] | None = None):
        self._weights: dict = {}
        self._total = 0
        if weights is not None:
            items = weights.items() if hasattr(weights, "items") else weights
            for p, w in items:
                self.add(p, w)

    @classmethod
    def from_points(cls, points: Iterable) -> "WeightedPointSet":
        s = cls()
        for p in points:
            s.add(p, 1)
        return s

    def add(self, point, weight=1) -> None:
        cur = self._weights.get(point, 0)
        new = cur + weight
        if new < 0:
            raise NegativeMultiplicity(
                f"multiplicity of {tuple(point)} would become {new}"
            )
        if new:
            self._weights[point] = new
        else:
            self._weights.pop(point, None)
        self._total += weight

    @property
    def total_weight(self):
        return self._total

    @property
    def distinct(self) -> int:
        return len(self._weights)

    def weight(self, point):
        return self._weights.get(point, 0)

    def items(self):
        return self._weights.items()

    def points(self):
        return self._weights.keys()

    def expand(self, limit: int | None = None) -> list:
        """Flatten to unit points; weights must be integral."""
        out = []
        for p, w in self._weights.items():
            if w != int(w):
                raise ValueError(f"cannot expand non-integral weight {w}")
            out.extend([p] * int(w))
            if limit is not None and len(out) > limit:
                raise ValueError(f"expanded size exceeds {limit}")
        return out

    def copy(self) -> "WeightedPointSet":
        s = WeightedPointSet()
        s._weights = dict(self._weights)
        s._total = self._total
        return s

    def __contains__(self, point) -> bool:
        return point in self._weights

    def __len__(self) -> int:
        return len(self._weights)

    def __iter__(self):
        return iter(self._weights)

    def __eq__(self, other) -> bool:
        return isinstance(other, WeightedPointSet) and self._weights == other._weights

    def __repr__(self) -> str:
        return f"WeightedPointSet(distinct={self.distinct}, total={self._total})"
