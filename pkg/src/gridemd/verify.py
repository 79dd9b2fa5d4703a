"""Structural checks an optimal matching must satisfy, run in bulk.

For every generated instance, the optimal matching is computed exactly
and checked against dense per-cell counts over shifted grids at every
level: the degree identity (summed |out - in| equals the l1 count
difference), the crossing bound (the count difference never exceeds twice
the crossings), the long-edge bound (at most k/2 times the count
difference many matching edges are k * 2**(level+1) or longer), cycle
freedom for long edges, and the path-decomposition bounds.
"""

from __future__ import annotations

import random

from .crossing_graph import (
    build_crossing_graph,
    degree_imbalance,
    no_long_edge_cycle,
    path_decompose,
)
from .exact import exact_emd
from .generators import InstanceSpec, generate_instance
from .geometry import SparseCellCounts, StreamUpdate, Point, edge_crosses, random_grid, validate_delta
from .runner import SCHEMA_VERSION


def _dense_l1(S, T, grid) -> int:
    counts = SparseCellCounts(grid)
    for side, points in (("S", S), ("T", T)):
        for p, w in points.items():
            counts = _apply(counts, side, p, w)
    return counts.l1()


def _apply(counts, side, p, w):
    from .geometry import apply_update

    return apply_update(counts, StreamUpdate(side, 1, Point(*p), int(w)))


def verify_claims(*, instances: int = 10, delta: int = 64, seed: int = 0, grids_per_level: int = 4) -> dict:
    max_level = validate_delta(delta)
    rng = random.Random(("verify", seed).__repr__())
    checks = {
        "degree_identity": 0,
        "crossing_bound": 0,
        "long_edge_bound": 0,
        "no_long_cycle": 0,
        "paths_within_imbalance": 0,
        "path_hop_bound": 0,
    }
    failures = {name: 0 for name in checks}

    for index in range(instances):
        spec = InstanceSpec(
            n=rng.randint(10, 40),
            k=rng.randint(1, 4),
            delta=delta,
            kind=rng.choice(("uniform", "clustered")),
            seed=seed * 7919 + index,
        )
        S, T = generate_instance(spec)
        matching = exact_emd(S, T)
        k = min(S.distinct, T.distinct)
        for level in range(max_level + 1):
            for _ in range(grids_per_level):
                grid = random_grid(level, rng, max_level)
                graph = build_crossing_graph(matching, grid)
                dense = _dense_l1(S, T, grid)
                threshold = k * (1 << (level + 1))

                checks["degree_identity"] += 1
                if degree_imbalance(graph) != dense:
                    failures["degree_identity"] += 1

                crossings = sum(
                    int(e.multiplicity)
                    for e in matching.edges
                    if edge_crosses(e.source, e.target, grid)
                )
                checks["crossing_bound"] += 1
                if dense > 2 * crossings:
                    failures["crossing_bound"] += 1

                long_count = sum(
                    int(e.multiplicity)
                    for e in matching.edges
                    if e.length >= threshold
                )
                checks["long_edge_bound"] += 1
                if long_count > k * dense / 2:
                    failures["long_edge_bound"] += 1

                checks["no_long_cycle"] += 1
                if not no_long_edge_cycle(graph, threshold):
                    failures["no_long_cycle"] += 1

                paths = path_decompose(graph, threshold)
                checks["paths_within_imbalance"] += 1
                if len(paths) > dense / 2:
                    failures["paths_within_imbalance"] += 1
                checks["path_hop_bound"] += 1
                if any(len(p) > k for p in paths):
                    failures["path_hop_bound"] += 1

    lines = []
    for name, total in checks.items():
        status = "PASS" if failures[name] == 0 else "FAIL"
        lines.append(f"{status} {name}: {total - failures[name]}/{total}")
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": "verify-claims",
        "config": {"instances": instances, "delta": delta, "seed": seed},
        "checks": {
            name: {"total": checks[name], "failures": failures[name]}
            for name in checks
        },
        "lines": lines,
        "all_passed": all(v == 0 for v in failures.values()),
    }
