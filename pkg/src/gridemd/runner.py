"""Run configurations, the experiment suites, and report assembly.

Reports are plain dicts serialized with sorted keys, so identical
(config, stream) inputs produce byte-identical JSON; timing is therefore
reported separately by the CLI, never inside the report.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass

from .coreset import CoresetConfig, StreamingCoreset
from .errors import ConfigError, EmptyStream, Infeasible, SizeMismatch, TooLarge
from .estimators import CombinedEstimator, MultigridEstimator, NestedGridEstimator
from .exact import exact_emd, grid_points, capacity_vectors
from .generators import InstanceSpec, generate_instance, instance_stream
from .geometry import (
    Point,
    StreamUpdate,
    WeightedPointSet,
    validate_delta,
    validate_update,
)

SCHEMA_VERSION = 1

ALGORITHMS = ("exact", "coreset", "multigrid", "baseline", "combined")


@dataclass(frozen=True)
class RunConfig:
    delta: int
    algorithm: str = "combined"
    epsilon: float = 0.1
    delta_prob: float = 0.05
    seed: int = 0
    grids_per_level: int | None = None
    backend: str = "sketch"
    k: int | None = None
    exact_reference_limit: int = 2000

    def __post_init__(self):
        validate_delta(self.delta)
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "algorithm": self.algorithm,
            "epsilon": self.epsilon,
            "delta_prob": self.delta_prob,
            "seed": self.seed,
            "grids_per_level": self.grids_per_level,
            "backend": self.backend,
            "k": self.k,
        }


def exact_sets(updates: list[StreamUpdate], delta: int):
    """Replay a stream into exact weighted sets; deletions must stay valid."""
    S = WeightedPointSet()
    T = WeightedPointSet()
    for u in updates:
        validate_update(u, delta)
        (S if u.side == "S" else T).add(Point(*u.point), u.sign * u.count)
    return S, T


def run(config: RunConfig, updates: list[StreamUpdate]) -> dict:
    """Run one algorithm over one stream and assemble the JSON report."""
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "config": config.as_dict(),
        "estimates": {},
        "memory": {},
    }

    if config.algorithm == "exact":
        S, T = exact_sets(updates, config.delta)
        if S.total_weight != T.total_weight:
            raise SizeMismatch(
                f"|S| = {S.total_weight} but |T| = {T.total_weight}"
            )
        if not len(S):
            raise EmptyStream("no points in the stream")
        cost = exact_emd(S, T).cost
        report["counts"] = {"n_s": S.total_weight, "n_t": T.total_weight}
        report["estimates"]["exact"] = cost
        report["estimates"]["value"] = cost
        return report

    if config.algorithm == "coreset":
        k = config.k if config.k is not None else _distinct_t(updates)
        cs = StreamingCoreset(
            CoresetConfig(
                k=k, epsilon=config.epsilon, delta=config.delta, seed=config.seed
            )
        )
        for u in updates:
            cs.apply(u)
        value = cs.estimate()
        report["counts"] = {"n_s": cs.n_s, "n_t": cs.n_t}
        report["estimates"]["coreset"] = value
        report["estimates"]["value"] = value
        report["memory"] = {
            "core_points": len(cs.core()),
            "t_points": cs.t_points().distinct,
            "movement": cs.movement,
            "reduces": len(cs.reduce_log),
        }
    else:
        est = _stream_estimator(config)
        for u in updates:
            est.update(u)
        if config.algorithm == "multigrid":
            result = est.estimate()
            value = result.multigrid
            report["estimates"].update(result.as_dict())
        elif config.algorithm == "baseline":
            value = est.estimate()
            report["estimates"]["baseline"] = value
        else:
            result = est.estimate()
            value = result.combined
            report["estimates"].update(result.as_dict())
        report["estimates"]["value"] = value
        report["counts"] = {"n_s": est_n(est)[0], "n_t": est_n(est)[1]}
        report["memory"] = est.memory_report()

    reference = _exact_reference(updates, config)
    if reference is not None:
        report["exact"] = {
            "cost": reference,
            "ratio": (value / reference) if reference else None,
        }
    return report


def est_n(est) -> tuple[int, int]:
    if isinstance(est, CombinedEstimator):
        return est.multigrid.n_s, est.multigrid.n_t
    return est.n_s, est.n_t


def _stream_estimator(config: RunConfig):
    kwargs = dict(
        epsilon=config.epsilon,
        delta_prob=config.delta_prob,
        seed=config.seed,
        backend=config.backend,
    )
    if config.algorithm == "multigrid":
        return MultigridEstimator(
            config.delta, grids_per_level=config.grids_per_level, **kwargs
        )
    if config.algorithm == "baseline":
        return NestedGridEstimator(config.delta, **kwargs)
    return CombinedEstimator(
        config.delta, grids_per_level=config.grids_per_level, **kwargs
    )


def _distinct_t(updates: list[StreamUpdate]) -> int:
    net = WeightedPointSet()
    for u in updates:
        if u.side == "T" and u.sign > 0:
            net.add(Point(*u.point), u.count)
    return max(1, net.distinct)


def _exact_reference(updates: list[StreamUpdate], config: RunConfig) -> float | None:
    try:
        S, T = exact_sets(updates, config.delta)
    except Exception:
        return None
    total = S.total_weight
    if total == 0 or total != T.total_weight or total > config.exact_reference_limit:
        return None
    return exact_emd(S, T).cost


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Capacitated k-median search


CAP_SEARCH_MAX_DELTA = 8
CAP_SEARCH_MAX_K = 2


def capacitated_search(
    updates: list[StreamUpdate],
    k: int,
    capacity: int,
    delta: int,
    estimator: str = "exact",
    *,
    epsilon: float = 0.1,
    delta_prob: float = 0.05,
    seed: int = 0,
) -> dict:
    """Exhaustive center search against one frozen sketch of the point set.

    The stream (S-side insertions) is ingested once; every k-subset of
    grid points is then tried with every capacity vector summing to n,
    scoring each candidate as the estimated EMD between the point set and
    the capacitated centers.  Sketch-backed estimators clone the frozen
    state and push the candidate's T-side updates into the copy.
    """
    if delta > CAP_SEARCH_MAX_DELTA or k > CAP_SEARCH_MAX_K or k < 1:
        raise TooLarge(
            f"capacitated search needs delta <= {CAP_SEARCH_MAX_DELTA} "
            f"and k <= {CAP_SEARCH_MAX_K}"
        )
    if estimator not in ALGORITHMS:
        raise ConfigError(f"estimator must be one of {ALGORITHMS}")

    P = WeightedPointSet()
    for u in updates:
        validate_update(u, delta)
        if u.side != "S":
            raise ConfigError("capacitated search expects an S-side point stream")
        P.add(Point(*u.point), u.sign * u.count)
    n = P.total_weight
    if n == 0:
        raise EmptyStream("no points in the stream")
    if capacity * k < n:
        raise Infeasible(f"capacity {capacity} x {k} centers cannot cover {n}")

    frozen = None
    coreset_core = None
    if estimator in ("multigrid", "baseline", "combined"):
        frozen = _stream_estimator(
            RunConfig(
                delta=delta,
                algorithm=estimator,
                epsilon=epsilon,
                delta_prob=delta_prob,
                seed=seed,
            )
        )
        for u in updates:
            frozen.update(u)
    elif estimator == "coreset":
        cs = StreamingCoreset(
            CoresetConfig(k=k, epsilon=epsilon, delta=delta, seed=seed)
        )
        for u in updates:
            cs.apply(u)
        coreset_core = cs.core()

    best = None
    for centers in itertools.combinations(grid_points(delta), k):
        for caps in capacity_vectors(n, k, capacity):
            candidate = WeightedPointSet(
                {q: cap for q, cap in zip(centers, caps) if cap}
            )
            if not len(candidate):
                continue
            if estimator == "exact":
                cost = exact_emd(P, candidate).cost
            elif estimator == "coreset":
                cost = exact_emd(coreset_core, candidate).cost
            else:
                probe = frozen.clone()
                for q, cap in candidate.items():
                    probe.update(StreamUpdate("T", 1, Point(*q), cap))
                result = probe.estimate()
                if estimator == "multigrid":
                    cost = result.multigrid
                elif estimator == "combined":
                    cost = result.combined
                else:
                    cost = result
            key = (cost, centers, caps)
            if best is None or key < best:
                best = key

    cost, centers, caps = best
    return {
        "schema_version": SCHEMA_VERSION,
        "estimator": estimator,
        "k": k,
        "capacity": capacity,
        "n": n,
        "centers": [list(q) for q in centers],
        "capacities": list(caps),
        "cost": cost,
    }


# ---------------------------------------------------------------------------
# Experiment suites


def experiment_ratio_envelope(
    *,
    instances: int = 20,
    delta: int = 64,
    n_range: tuple[int, int] = (40, 120),
    k_range: tuple[int, int] = (1, 4),
    epsilon: float = 0.1,
    delta_prob: float = 0.05,
    seed: int = 0,
    backend: str = "sketch",
) -> dict:
    """Estimate/exact ratios of the stream estimators over seeded instances."""
    rows = []
    for index in range(instances):
        rng = random.Random(("ratio-envelope", seed, index).__repr__())
        spec = InstanceSpec(
            n=rng.randint(*n_range),
            k=rng.randint(*k_range),
            delta=delta,
            kind=rng.choice(("uniform", "clustered")),
            seed=seed * 100003 + index,
        )
        S, T = generate_instance(spec)
        exact_cost = exact_emd(S, T).cost
        est = CombinedEstimator(
            delta, epsilon=epsilon, delta_prob=delta_prob,
            seed=spec.seed, backend=backend,
        )
        for u in instance_stream(S, T, rng):
            est.update(u)
        result = est.estimate()
        rows.append(
            {
                "instance": index,
                "kind": spec.kind,
                "n": spec.n,
                "k": spec.k,
                "exact": exact_cost,
                "multigrid": result.multigrid,
                "baseline": result.baseline,
                "combined": result.combined,
                "multigrid_ratio": result.multigrid / exact_cost,
                "baseline_ratio": result.baseline / exact_cost,
                "combined_ratio": result.combined / exact_cost,
            }
        )
    ratios = {
        name: [r[f"{name}_ratio"] for r in rows]
        for name in ("multigrid", "baseline", "combined")
    }
    aggregate = {
        name: {
            "min": min(values),
            "max": max(values),
            "mean": sum(values) / len(values),
        }
        for name, values in ratios.items()
    }
    aggregate["baseline_fitted"] = {
        "lower_inverse_constant": 1.0 / min(ratios["baseline"]),
        "upper_log_constant": max(ratios["baseline"]) / max(1, delta.bit_length() - 1),
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": "ratio-envelope",
        "config": {
            "instances": instances,
            "delta": delta,
            "epsilon": epsilon,
            "delta_prob": delta_prob,
            "seed": seed,
            "backend": backend,
        },
        "instances": rows,
        "aggregate": aggregate,
    }


def experiment_min_grid_advantage(
    *,
    instances: int = 40,
    delta: int = 64,
    n: int = 64,
    k: int = 3,
    seed: int = 0,
) -> dict:
    """Show why taking the best grid per level matters.

    Exact (dense-count) hierarchies are built for the single-grid and the
    min-over-grids estimators on adversarial instances; the suite reports
    how often the single grid's estimate is strictly worse.  The minimum
    over more grids can only shrink per-level norms, so "worse" always
    means "larger".
    """
    rows = []
    worse = 0
    for index in range(instances):
        spec = InstanceSpec(
            n=n, k=k, delta=delta, kind="adversarial-min-grid",
            seed=seed * 99991 + index,
        )
        S, T = generate_instance(spec)
        exact_cost = exact_emd(S, T).cost
        stream = instance_stream(S, T)
        values = {}
        for label, grids in (("single", 1), ("multi", None)):
            est = MultigridEstimator(
                delta, seed=spec.seed, grids_per_level=grids, backend="dense"
            )
            for u in stream:
                est.update(u)
            values[label] = est.estimate().multigrid
        strictly_worse = values["single"] > values["multi"]
        worse += strictly_worse
        rows.append(
            {
                "instance": index,
                "exact": exact_cost,
                "single_grid": values["single"],
                "min_over_grids": values["multi"],
                "single_strictly_worse": strictly_worse,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": "min-grid-advantage",
        "config": {"instances": instances, "delta": delta, "n": n, "k": k, "seed": seed},
        "instances": rows,
        "fraction_single_worse": worse / instances,
    }
