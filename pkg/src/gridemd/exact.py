"""Exact earth-mover distance and tiny-scale clustering oracles.

The main solver runs minimum-cost flow on the bipartite support graph
(distinct source points x distinct target points), which handles
multiplicities without expanding the multisets.  Real-valued weights or
costs are scaled to integers first so the flow solver stays exact; the
scale factors bound the resulting relative error by about 1e-6.

The brute-force routines exist as independent ground truth for tests and
are deliberately naive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx

from .errors import EmptyInput, Infeasible, TooLarge, WeightMismatch
from .geometry import WeightedPointSet

WEIGHT_SCALE = 10**6
COST_SCALE = 10**6
WEIGHT_TOLERANCE = 1e-9


def l1_distance(a, b) -> float:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def l2_distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


_GROUND = {"l1": l1_distance, "l2": l2_distance}


@dataclass(frozen=True)
class MatchingEdge:
    source: tuple
    target: tuple
    multiplicity: float
    length: float


@dataclass
class Matching:
    """A transportation plan; `cost` is the weighted sum of edge lengths."""

    edges: list[MatchingEdge] = field(default_factory=list)
    cost: float = 0


def _is_integral(x) -> bool:
    return isinstance(x, int) or (isinstance(x, float) and x.is_integer())


def _integerize_weights(sets: list[WeightedPointSet]):
    """Scale weights to integers, all sets hitting one common total.

    Integral inputs pass through unscaled.  Otherwise weights are scaled
    by WEIGHT_SCALE and rounded by largest remainder so each set sums to
    exactly round(total * WEIGHT_SCALE).
    """
    if all(_is_integral(w) for s in sets for _, w in s.items()):
        return [{p: int(w) for p, w in s.items()} for s in sets], 1
    target = round(sets[0].total_weight * WEIGHT_SCALE)
    out = []
    for s in sets:
        scaled = [(p, w * WEIGHT_SCALE) for p, w in s.items()]
        floors = {p: int(v) for p, v in scaled}
        deficit = target - sum(floors.values())
        by_frac = sorted(scaled, key=lambda t: (t[1] - int(t[1]), t[0]), reverse=True)
        for p, _ in by_frac[:deficit]:
            floors[p] += 1
        out.append({p: v for p, v in floors.items() if v})
    return out, WEIGHT_SCALE


def exact_emd(S: WeightedPointSet, T: WeightedPointSet, ground: str = "l1") -> Matching:
    """Minimum-cost transportation between two equal-mass weighted sets.

    Exact for integer weights at integer coordinates under l1 ground
    distance; within ~1e-6 relative otherwise (weights and costs are
    integerized before solving).  `ground` may be "l1" or "l2".
    """
    if S.total_weight == 0 or T.total_weight == 0 or not len(S) or not len(T):
        raise EmptyInput("both point sets must be nonempty")
    gap = abs(S.total_weight - T.total_weight)
    if gap > WEIGHT_TOLERANCE * max(1.0, abs(S.total_weight)):
        raise WeightMismatch(
            f"total weights differ: {S.total_weight} vs {T.total_weight}"
        )
    dist = _GROUND[ground]

    (sw, tw), wscale = _integerize_weights([S, T])
    s_pts = sorted(sw)
    t_pts = sorted(tw)
    costs = {}
    integral_costs = True
    for p in s_pts:
        for q in t_pts:
            d = dist(p, q)
            costs[p, q] = d
            integral_costs = integral_costs and _is_integral(d)
    cscale = 1 if integral_costs else COST_SCALE

    graph = nx.DiGraph()
    for i, p in enumerate(s_pts):
        graph.add_node(("s", i), demand=-sw[p])
    for j, q in enumerate(t_pts):
        graph.add_node(("t", j), demand=tw[q])
    for i, p in enumerate(s_pts):
        for j, q in enumerate(t_pts):
            graph.add_edge(("s", i), ("t", j), weight=round(costs[p, q] * cscale))

    flow_cost, flow = nx.network_simplex(graph)

    edges = []
    for i, p in enumerate(s_pts):
        for (kind, j), amount in flow[("s", i)].items():
            if amount:
                q = t_pts[j]
                mult = amount if wscale == 1 else amount / wscale
                edges.append(MatchingEdge(p, q, mult, costs[p, q]))
    cost = sum(e.multiplicity * e.length for e in edges)
    if wscale == 1 and cscale == 1:
        cost = flow_cost
    return Matching(edges=edges, cost=cost)


BRUTE_FORCE_LIMIT = 8


def brute_force_emd(S: WeightedPointSet, T: WeightedPointSet) -> float:
    """Minimum over all bijections by explicit enumeration; n <= 8 only."""
    s_pts = S.expand(BRUTE_FORCE_LIMIT)
    t_pts = T.expand(BRUTE_FORCE_LIMIT)
    if len(s_pts) != len(t_pts):
        raise WeightMismatch(f"sizes differ: {len(s_pts)} vs {len(t_pts)}")
    if len(s_pts) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"brute force needs n <= {BRUTE_FORCE_LIMIT}")
    if not s_pts:
        raise EmptyInput("both point sets must be nonempty")
    best = None
    for perm in itertools.permutations(range(len(t_pts))):
        total = sum(l1_distance(s_pts[i], t_pts[j]) for i, j in enumerate(perm))
        if best is None or total < best:
            best = total
    return best


def grid_points(delta: int) -> list[tuple[int, int]]:
    return [(x, y) for x in range(1, delta + 1) for y in range(1, delta + 1)]


KMEDIAN_MAX_DELTA = 8
KMEDIAN_MAX_K = 3


def exact_kmedian(P: WeightedPointSet, k: int, delta: int):
    """Optimal k-median cost over all center subsets of the grid.

    Cost is the weighted sum of Euclidean distances to the nearest chosen
    center.  Exhaustive, so restricted to delta <= 8 and k <= 3.
    Returns (centers, cost) with centers sorted.
    """
    if delta > KMEDIAN_MAX_DELTA or k > KMEDIAN_MAX_K or k < 1:
        raise TooLarge(f"exhaustive k-median needs delta <= 8 and 1 <= k <= 3")
    if not len(P):
        raise EmptyInput("point set is empty")
    pts = list(P.items())
    best_cost = None
    best_centers = None
    for centers in itertools.combinations(grid_points(delta), k):
        cost = sum(w * min(l2_distance(p, c) for c in centers) for p, w in pts)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_centers = centers
    return tuple(sorted(best_centers)), best_cost


def capacity_vectors(n: int, k: int, cap: int):
    """All tuples of k capacities in [0, cap] summing to n."""

    def rec(remaining, slots):
        if slots == 1:
            if remaining <= cap:
                yield (remaining,)
            return
        for first in range(min(cap, remaining) + 1):
            for rest in rec(remaining - first, slots - 1):
                yield (first,) + rest

    yield from rec(n, k)


CAP_KMEDIAN_MAX_N = 8
CAP_KMEDIAN_MAX_DELTA = 4
CAP_KMEDIAN_MAX_K = 2


def exact_capacitated_kmedian(P: WeightedPointSet, k: int, c: int, delta: int):
    """Capacitated k-median by exhausting center sets and capacity splits.

    Every k-subset of grid points is tried with every capacity vector
    summing to n with entries at most c; each candidate's assignment cost
    is the transportation cost between P and the capacitated centers.
    Returns (centers, capacities, cost).
    """
    n = P.total_weight
    if n > CAP_KMEDIAN_MAX_N or delta > CAP_KMEDIAN_MAX_DELTA or k > CAP_KMEDIAN_MAX_K:
        raise TooLarge(
            f"exhaustive capacitated k-median needs n <= {CAP_KMEDIAN_MAX_N}, "
            f"delta <= {CAP_KMEDIAN_MAX_DELTA}, k <= {CAP_KMEDIAN_MAX_K}"
        )
    if c * k < n:
        raise Infeasible(f"capacity {c} x {k} centers cannot cover {n} points")
    if not len(P):
        raise EmptyInput("point set is empty")
    best = None
    for centers in itertools.combinations(grid_points(delta), k):
        for caps in capacity_vectors(n, k, c):
            candidate = WeightedPointSet(
                {q: cap for q, cap in zip(centers, caps) if cap}
            )
            if not len(candidate):
                continue
            cost = exact_emd(P, candidate).cost
            key = (cost, centers, caps)
            if best is None or key < best:
                best = key
    cost, centers, caps = best
    return centers, caps, cost
