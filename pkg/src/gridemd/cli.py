"""Command-line interface.

Subcommands: `estimate` runs one algorithm over a stream file,
`experiment` runs a named suite, `capkmedian` runs the capacitated
k-median search, and `verify-claims` replays the structural checks on
generated instances.  Exit codes: 0 on success, 2 for parse or
configuration errors, 3 for model violations (mismatched sizes, deletions
in coreset mode), 1 for failed verification checks.
"""

from __future__ import annotations

import argparse
import sys
import time

from .errors import ConfigError, GridEmdError, ModelViolation
from .runner import (
    ALGORITHMS,
    RunConfig,
    capacitated_search,
    experiment_min_grid_advantage,
    experiment_ratio_envelope,
    report_json,
    run,
)
from .stream_io import parse_stream
from .verify import verify_claims


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--delta", type=int, default=64, help="grid extent (power of two)")
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--delta-prob", type=float, default=0.05, help="sketch failure budget")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--report", help="write the JSON report to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridemd")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate EMD over a stream file")
    _add_common(est)
    est.add_argument("--algorithm", choices=ALGORITHMS, default="combined")
    est.add_argument("--grids-per-level", type=int, default=None)
    est.add_argument("--backend", choices=("sketch", "dense"), default="sketch")
    est.add_argument("--stream", required=True, help="stream file path")

    exp = sub.add_parser("experiment", help="run an experiment suite")
    _add_common(exp)
    exp.add_argument("--suite", choices=("ratio-envelope", "min-grid-advantage"),
                     default="ratio-envelope")
    exp.add_argument("--instances", type=int, default=20)

    cap = sub.add_parser("capkmedian", help="capacitated k-median search")
    _add_common(cap)
    cap.add_argument("--stream", required=True, help="S-side point stream")
    cap.add_argument("--k", type=int, required=True)
    cap.add_argument("--capacity", type=int, required=True)
    cap.add_argument("--estimator", choices=ALGORITHMS, default="exact")

    ver = sub.add_parser("verify-claims", help="replay the structural checks")
    _add_common(ver)
    ver.add_argument("--instances", type=int, default=10)

    return parser


def _emit(report: dict, path: str | None) -> None:
    text = report_json(report)
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "estimate":
            config = RunConfig(
                delta=args.delta,
                algorithm=args.algorithm,
                epsilon=args.epsilon,
                delta_prob=args.delta_prob,
                seed=args.seed,
                grids_per_level=args.grids_per_level,
                backend=args.backend,
            )
            updates = parse_stream(args.stream, args.delta)
            report = run(config, updates)
            _emit(report, args.report)
            value = report["estimates"]["value"]
            print(f"estimate: {value}", file=sys.stderr)
        elif args.command == "experiment":
            if args.suite == "ratio-envelope":
                report = experiment_ratio_envelope(
                    instances=args.instances,
                    delta=args.delta,
                    epsilon=args.epsilon,
                    delta_prob=args.delta_prob,
                    seed=args.seed,
                )
            else:
                report = experiment_min_grid_advantage(
                    instances=args.instances, delta=args.delta, seed=args.seed
                )
            _emit(report, args.report)
        elif args.command == "capkmedian":
            updates = parse_stream(args.stream, args.delta)
            report = capacitated_search(
                updates,
                args.k,
                args.capacity,
                args.delta,
                args.estimator,
                epsilon=args.epsilon,
                delta_prob=args.delta_prob,
                seed=args.seed,
            )
            _emit(report, args.report)
            print(f"cost: {report['cost']} centers: {report['centers']}", file=sys.stderr)
        else:
            report = verify_claims(
                instances=args.instances, delta=args.delta, seed=args.seed
            )
            _emit(report, args.report)
            for line in report["lines"]:
                print(line, file=sys.stderr)
            if not report["all_passed"]:
                return 1
    except ModelViolation as exc:
        print(f"model violation: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GridEmdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wall time: {time.perf_counter() - started:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
