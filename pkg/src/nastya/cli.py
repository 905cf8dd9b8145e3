"""Command-line interface: run, sweep, verify, stats."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from .errors import ConfigError, NastyaError
from .harness import (
    SWEEP_AXES,
    build_problem,
    load_spec,
    problem_stats,
    run_experiment,
    run_sweep,
)
from .verification import SUITES, _EXTRA_SUITES, verify

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="override base seed")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument("--ensemble", type=int, default=None,
                        help="override ensemble size")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for the seed ensemble")


def _apply_overrides(spec, args):
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.ensemble is not None:
        if args.ensemble < 1:
            raise ConfigError("ensemble must be >= 1")
        spec = dataclasses.replace(spec, ensemble=args.ensemble)
    return spec


def _jsonable(x) -> float | None:
    x = float(x)
    return None if math.isnan(x) else x


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _summary_payload(record) -> dict:
    return {
        "n_seeds": record.n_seeds,
        "divergence_count": record.divergence_count,
        "final_round": int(record.rounds[-1]),
        "final_mean_f": _jsonable(record.means["f"][-1]),
        "final_mean_dist_sq": _jsonable(record.means["dist_sq"][-1]),
        "bound_checks": [
            {
                "name": c.name,
                "applicable": c.applicable,
                "satisfied": c.satisfied,
                "detail": c.detail,
            }
            for c in record.checks
        ],
        "trace_csv": str(record.trace_path),
        "summary_csv": str(record.summary_path),
    }


def _record_failed(record) -> bool:
    if record.divergence_count > 0:
        return True
    return any(c.applicable and not c.satisfied for c in record.checks)


def _cmd_run(args) -> int:
    spec = _apply_overrides(load_spec(args.spec), args)
    record = run_experiment(spec, args.out_dir, threads=args.threads)
    _emit(_summary_payload(record))
    return EXIT_FAILURE if _record_failed(record) else EXIT_OK


def _cmd_sweep(args) -> int:
    spec = _apply_overrides(load_spec(args.spec), args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse sweep values: {args.values!r}") from None
    sweep = run_sweep(spec, args.axis, values, args.out_dir, threads=args.threads)
    payload = {
        "axis": sweep.axis,
        "combined_csv": str(sweep.combined_path),
        "errors": sweep.errors,
        "results": {
            str(v): _summary_payload(rec) for v, rec in sweep.records.items()
        },
    }
    _emit(payload)
    if not sweep.records:
        return EXIT_FAILURE
    failed = any(_record_failed(rec) for rec in sweep.records.values())
    return EXIT_FAILURE if failed else EXIT_OK


def _cmd_verify(args) -> int:
    results = verify(args.suite)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} [{r.suite}] {r.name}: {r.detail}")
    payload = [dataclasses.asdict(r) for r in results]
    print(json.dumps({"checks": payload, "failed": sum(not r.passed for r in results)}))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def _cmd_stats(args) -> int:
    spec = _apply_overrides(load_spec(args.spec), args)
    problem = build_problem(spec.problem)
    stats = problem_stats(problem)
    payload = {
        "M": stats.M,
        "n": stats.n,
        "sigma_star_sq": stats.sigma_star_sq,
        "sigma_star_m_sq": [float(v) for v in stats.sigma_star_m_sq],
        "Sigma_star_sq": stats.Sigma_star_sq,
        "delta_star": stats.delta_star,
        "delta_star_m": None if stats.delta_star_m is None
        else [float(v) for v in stats.delta_star_m],
        "D_star_sq": stats.D_star_sq,
        "estimate_tol": stats.estimate_tol,
        "smoothness": problem.smoothness,
        "strong_convexity": problem.strong_convexity,
        "convexity": problem.convexity.value,
    }
    _emit(payload)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nastya",
        description="Simulator and verification suite for server-stepsize "
        "federated optimization with random reshuffling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment spec")
    p_run.add_argument("spec", help="path to the spec file")
    _add_common(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter axis")
    p_sweep.add_argument("spec", help="path to the spec file")
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    _add_common(p_sweep)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument(
        "suite", nargs="?", default="all",
        choices=sorted([*SUITES, *_EXTRA_SUITES, "all"]),
    )
    p_verify.set_defaults(fn=_cmd_verify)

    p_stats = sub.add_parser("stats", help="print heterogeneity statistics")
    p_stats.add_argument("spec", help="path to the spec file")
    _add_common(p_stats)
    p_stats.set_defaults(fn=_cmd_stats)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NastyaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
