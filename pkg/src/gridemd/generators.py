"""Seeded instance generators for experiments and tests.

Every generator produces two location-disjoint weighted sets of equal
total weight n, with the T side holding exactly k distinct points.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ConfigError
from .geometry import Point, StreamUpdate, WeightedPointSet, validate_delta

GENERATOR_KINDS = ("uniform", "clustered", "adversarial-min-grid")


@dataclass(frozen=True)
class InstanceSpec:
    n: int
    k: int
    delta: int
    kind: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        validate_delta(self.delta)
        if self.kind not in GENERATOR_KINDS:
            raise ConfigError(f"unknown generator {self.kind!r}")
        if self.n < self.k or self.k < 1:
            raise ConfigError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.delta * self.delta < self.n + self.k:
            raise ConfigError("grid too small for the requested points")


def _composition(total: int, parts: int, rng: random.Random) -> list[int]:
    """Random positive integers summing to `total`."""
    if parts == 1:
        return [total]
    cuts = sorted(rng.sample(range(1, total), parts - 1))
    bounds = [0] + cuts + [total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def _distinct_points(count: int, delta: int, rng: random.Random, avoid=()):
    taken = set(avoid)
    out = []
    while len(out) < count:
        p = Point(rng.randint(1, delta), rng.randint(1, delta))
        if p not in taken:
            taken.add(p)
            out.append(p)
    return out


def generate_instance(spec: InstanceSpec) -> tuple[WeightedPointSet, WeightedPointSet]:
    """Returns (S, T) for the spec; deterministic in the seed."""
    rng = random.Random(("instance", spec.kind, spec.seed, spec.n, spec.k, spec.delta).__repr__())
    if spec.kind == "uniform":
        return _uniform(spec, rng)
    if spec.kind == "clustered":
        return _clustered(spec, rng)
    return _adversarial_min_grid(spec, rng)


def _uniform(spec: InstanceSpec, rng: random.Random):
    t_points = _distinct_points(spec.k, spec.delta, rng)
    T = WeightedPointSet(zip(t_points, _composition(spec.n, spec.k, rng)))
    S = WeightedPointSet()
    forbidden = set(t_points)
    for _ in range(spec.n):
        while True:
            p = Point(rng.randint(1, spec.delta), rng.randint(1, spec.delta))
            if p not in forbidden:
                S.add(p, 1)
                break
    return S, T


def _clustered(spec: InstanceSpec, rng: random.Random):
    """S points pile up in small boxes around the T points (short edges)."""
    t_points = _distinct_points(spec.k, spec.delta, rng)
    T = WeightedPointSet(zip(t_points, _composition(spec.n, spec.k, rng)))
    forbidden = set(t_points)
    spread = max(2, spec.delta // 16)
    S = WeightedPointSet()
    for _ in range(spec.n):
        center = t_points[rng.randrange(spec.k)]
        while True:
            p = Point(
                min(spec.delta, max(1, center.x + rng.randint(-spread, spread))),
                min(spec.delta, max(1, center.y + rng.randint(-spread, spread))),
            )
            if p not in forbidden:
                S.add(p, 1)
                break
    return S, T


#: x-offsets of the adversarial pairs; their residues disagree modulo
#: every small power of two, so any single shift cuts some heavy pair at
#: some level while the best shift per level cuts only light ones.
_STAGGER = (0, 1, 2, 5)
_MASS_SPLIT = (0.6, 0.25, 0.1, 0.05)


def _adversarial_min_grid(spec: InstanceSpec, rng: random.Random):
    """Unit-length S-T pairs with skewed masses at staggered parities.

    The optimal matching joins each S pile to the T pile one step to its
    right, so the exact cost is n.  A fixed random grid per level cuts a
    heavy pile with constant probability, while the minimum over many
    shifts finds a grid cutting only the light piles, so a single-grid
    hierarchy overestimates strictly more often than not.
    """
    if spec.k > len(_STAGGER):
        raise ConfigError(f"adversarial generator supports k <= {len(_STAGGER)}")
    if spec.delta < 16:
        raise ConfigError("adversarial generator needs delta >= 16")
    weights = _MASS_SPLIT[: spec.k]
    scale = sum(weights)
    masses = [max(1, round(spec.n * w / scale)) for w in weights]
    masses[0] += spec.n - sum(masses)
    if masses[0] < 1:
        raise ConfigError(f"n too small to split across {spec.k} piles")
    # Keeping the base a multiple of 8 preserves each offset's residues
    # modulo 2, 4, and 8, and the range keeps x + 1 inside the grid.
    base = 8 * rng.randrange(1, max(2, spec.delta // 8 - 1))
    rows = rng.sample(range(1, spec.delta + 1), spec.k)
    S = WeightedPointSet()
    T = WeightedPointSet()
    for offset, row, mass in zip(_STAGGER, rows, masses):
        x = base + offset
        S.add(Point(x, row), mass)
        T.add(Point(x + 1, row), mass)
    return S, T


def instance_stream(
    S: WeightedPointSet,
    T: WeightedPointSet,
    rng: random.Random | None = None,
) -> list[StreamUpdate]:
    """Unit-count insertions for both sets, shuffled when a rng is given."""
    updates = [
        StreamUpdate(side, 1, Point(*p), 1)
        for side, points in (("S", S), ("T", T))
        for p, w in points.items()
        for _ in range(int(w))
    ]
    if rng is not None:
        rng.shuffle(updates)
    return updates


def with_cancelling_pairs(
    updates: list[StreamUpdate], rng: random.Random, pairs: int
) -> list[StreamUpdate]:
    """Append matched insert/delete pairs of already-present points.

    The inserted copy duplicates an existing insertion's point, and its
    deletion always comes later, so multiplicities never go negative and
    the final multisets are unchanged.
    """
    inserts = [u for u in updates if u.sign > 0]
    out = list(updates)
    for _ in range(pairs):
        src = rng.choice(inserts)
        at = rng.randrange(len(out) + 1)
        out.insert(at, StreamUpdate(src.side, 1, src.point, 1))
        after = rng.randrange(at + 1, len(out) + 1)
        out.insert(after, StreamUpdate(src.side, -1, src.point, 1))
    return out
