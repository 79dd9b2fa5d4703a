"""Directed multigraph of matching edges that cross a grid, with the
structural checks an optimal matching must satisfy.

Vertices are the grid cells containing matched points; every matching edge
whose endpoints fall in different cells contributes a directed edge from
the source point's cell to the target point's cell, carrying the edge's
l1 length and multiplicity.  Two facts make this graph useful as a test
substrate: per vertex, out-degree minus in-degree equals the cell's count
imbalance between the two sets (so summed absolute imbalance equals the l1
norm of the per-cell count difference), and for an optimal matching no
directed cycle can contain an edge of length at least k * 2**(level+1)
(re-pairing the cycle inside its cells would be cheaper).

`path_decompose` peels maximal source-to-sink paths seeded at long edges,
keeping each path vertex-simple by excising any closed sub-walk it
accidentally enters.  Each extraction lowers the total degree imbalance by
exactly two, which bounds the number of paths by half the imbalance and
hence the number of long edges by k times that.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import CycleEncountered
from .exact import Matching
from .geometry import CellId, GridSpec, cell_of, edge_crosses


@dataclass(frozen=True)
class CrossingEdge:
    tail: CellId
    head: CellId
    length: float
    multiplicity: int


@dataclass
class CrossingGraph:
    grid: GridSpec
    vertices: set[CellId] = field(default_factory=set)
    edges: list[CrossingEdge] = field(default_factory=list)
    out_degree: Counter = field(default_factory=Counter)
    in_degree: Counter = field(default_factory=Counter)


def build_crossing_graph(matching: Matching, grid: GridSpec) -> CrossingGraph:
    """Graph of `matching`'s grid-crossing edges; degrees are multiplicity-weighted."""
    graph = CrossingGraph(grid=grid)
    for e in matching.edges:
        tail = cell_of(e.source, grid)
        head = cell_of(e.target, grid)
        graph.vertices.add(tail)
        graph.vertices.add(head)
        if tail == head:
            continue
        mult = int(e.multiplicity)
        if mult != e.multiplicity:
            raise ValueError("crossing graph needs integral multiplicities")
        graph.edges.append(CrossingEdge(tail, head, e.length, mult))
        graph.out_degree[tail] += mult
        graph.in_degree[head] += mult
    return graph


def degree_imbalance(graph: CrossingGraph) -> int:
    """Sum over vertices of |out-degree - in-degree|."""
    return sum(
        abs(graph.out_degree[v] - graph.in_degree[v]) for v in graph.vertices
    )


def no_long_edge_cycle(graph: CrossingGraph, threshold: float) -> bool:
    """True when no directed cycle contains an edge of length >= threshold.

    Long edges are removed and each is checked for a head-to-tail
    reconnection through the remaining short edges; any reconnection
    closes a cycle through that long edge.
    """
    short_adj: dict[CellId, set[CellId]] = defaultdict(set)
    long_edges = []
    for e in graph.edges:
        if e.length >= threshold:
            long_edges.append(e)
        else:
            short_adj[e.tail].add(e.head)
    for e in long_edges:
        if _reachable(short_adj, e.head, e.tail):
            return False
    return True


def _reachable(adj: dict, start: CellId, goal: CellId) -> bool:
    if start == goal:
        return True
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj.get(v, ()):
            if w == goal:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


class _EdgePool:
    """Remaining edge copies, indexed both ways, with deterministic order."""

    def __init__(self, graph: CrossingGraph):
        self.remaining: Counter = Counter()
        self.out_adj: dict[CellId, list] = defaultdict(list)
        self.in_adj: dict[CellId, list] = defaultdict(list)
        self.out_deg: Counter = Counter(graph.out_degree)
        self.in_deg: Counter = Counter(graph.in_degree)
        for e in sorted(graph.edges, key=lambda e: (e.tail, e.head, e.length)):
            key = (e.tail, e.head, e.length)
            if self.remaining[key] == 0:
                self.out_adj[e.tail].append(key)
                self.in_adj[e.head].append(key)
            self.remaining[key] += e.multiplicity

    def take(self, key) -> None:
        self.remaining[key] -= 1
        self.out_deg[key[0]] -= 1
        self.in_deg[key[1]] -= 1

    def longest_remaining(self, threshold: float):
        best = None
        for key, count in self.remaining.items():
            if count > 0 and key[2] >= threshold:
                if best is None or (-key[2], key[0], key[1]) < (-best[2], best[0], best[1]):
                    best = key
        return best

    def next_copy(self, vertex: CellId, ahead: bool):
        adj = self.out_adj if ahead else self.in_adj
        for key in adj.get(vertex, ()):
            if self.remaining[key] > 0:
                return key
        return None


def path_decompose(graph: CrossingGraph, threshold: float) -> list[list[CrossingEdge]]:
    """Peel vertex-simple paths until no edge of length >= threshold remains."""
    return path_decompose_full(graph, threshold)[0]


def path_decompose_full(graph: CrossingGraph, threshold: float):
    """Peel paths seeded at long edges; returns (paths, discarded cycles).

    Each path takes a longest remaining edge, grows forward until a vertex
    with more incoming than outgoing copies remains (or no outgoing copy),
    and grows backward symmetrically.  A walk that closes a loop onto
    itself has the loop peeled off as a directed cycle; cycles are
    balance-neutral, so every extracted path lowers the total degree
    imbalance by exactly two.  For an optimal matching a cycle can never
    hold a long edge, hence every long edge ends up on a path; a path
    whose endpoints coincide means the seed edge itself lies on a cycle
    and raises CycleEncountered.
    """
    pool = _EdgePool(graph)
    paths = []
    cycles = []
    while True:
        seed = pool.longest_remaining(threshold)
        if seed is None:
            break
        pool.take(seed)
        forward, end = _walk(pool, seed[1], True, cycles)
        backward, start = _walk(pool, seed[0], False, cycles)
        keys = list(reversed(backward)) + [seed] + forward
        vertices = [keys[0][0]] + [k[1] for k in keys]
        if start == end or len(set(vertices)) != len(vertices):
            raise CycleEncountered(
                f"edge {seed[0]} -> {seed[1]} of length {seed[2]} lies on a cycle"
            )
        paths.append([CrossingEdge(t, h, l, 1) for t, h, l in keys])
    return paths, cycles


def _walk(pool: _EdgePool, origin: CellId, ahead: bool, cycles: list):
    """Greedy vertex-simple walk from `origin`, consuming pool copies.

    Follows out-edges (in-edges when walking backward), stopping at a
    vertex whose remaining in-copies outnumber its out-copies or that has
    no remaining copy to follow.  Closing a loop onto the walk peels the
    loop off into `cycles` and resumes from the revisited vertex.
    """
    path_keys: list = []
    visited = {origin: 0}
    current = origin
    while True:
        if ahead:
            if pool.in_deg[current] > pool.out_deg[current]:
                break
        else:
            if pool.out_deg[current] > pool.in_deg[current]:
                break
        key = pool.next_copy(current, ahead)
        if key is None:
            break
        pool.take(key)
        nxt = key[1] if ahead else key[0]
        if nxt in visited:
            anchor = visited[nxt]
            loop = path_keys[anchor:] + [key]
            cycles.append([CrossingEdge(t, h, l, 1) for t, h, l in loop])
            del path_keys[anchor:]
            for v in [v for v, i in visited.items() if i > anchor]:
                del visited[v]
            current = nxt
            continue
        path_keys.append(key)
        visited[nxt] = len(path_keys)
        current = nxt
    return path_keys, current


def decomposition_respects_hop_bound(
    graph: CrossingGraph, threshold: float, k: int
) -> bool:
    """True when every peeled path has at most k edges."""
    return all(len(path) <= k for path in path_decompose(graph, threshold))


def short_edge_threshold(level: int, k: int) -> float:
    """Lengths below cell_size / (8k) count as short for a level-`level` grid."""
    return (1 << level) / (8 * k)


def avoids_short_crossings(grid: GridSpec, matching: Matching, k: int) -> bool:
    """True when no matching edge shorter than cell_size/(8k) crosses `grid`."""
    threshold = short_edge_threshold(grid.level, k)
    for e in matching.edges:
        if e.length < threshold and edge_crosses(e.source, e.target, grid):
            return False
    return True
