"""Command-line entry point.

    sourcescope simulate --scenario <path> --out <dir> [--seed u64]
        [--algorithm 1|2|both] [--sweep axis=v1,v2,...] [--reps n]
        [--threads n]

Exit codes: 0 success, 2 validation error, 3 certificate violation.
The SOURCE_SCOPE_THREADS environment variable overrides --threads.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ScenarioError, SourceScopeError
from . import bench
from .scenarios import load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CERTIFICATE = 3


def _parse_sweep(text):
    if "=" not in text:
        raise ScenarioError(
            "--sweep expects axis=v1,v2,... (got %r)" % text)
    axis, _, tail = text.partition("=")
    axis = axis.strip()
    if axis not in bench.SWEEP_AXES:
        raise ScenarioError(
            "sweep axis %r not in %s" % (axis, bench.SWEEP_AXES))
    try:
        values = [int(v) if axis == "N" else float(v)
                  for v in tail.split(",") if v.strip()]
    except ValueError as exc:
        raise ScenarioError("bad sweep value: %s" % exc) from exc
    if not values:
        raise ScenarioError("sweep needs at least one value")
    return axis, values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sourcescope",
        description="Simulate forced IVPs and recover catalyst sources.")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run a scenario end to end")
    sim.add_argument("--scenario", required=True, help="scenario file path")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None,
                     help="override the scenario noise seed")
    sim.add_argument("--algorithm", choices=["1", "2", "both"],
                     default=None, help="override algorithm selection")
    sim.add_argument("--sweep", default=None, metavar="axis=v1,v2,...",
                     help="sweep one axis (beta, L, sigma, N)")
    sim.add_argument("--reps", type=int, default=10,
                     help="seeds per sweep point (default 10)")
    sim.add_argument("--threads", type=int, default=None,
                     help="worker threads for sweeps")
    return parser


def _simulate(args):
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn = scn.with_overrides(seed=args.seed)
    results = []
    violated = False
    outcome = bench.run_scenario(scn, algorithm=args.algorithm)
    results.append(outcome)
    violated |= not outcome.all_satisfied
    if args.sweep:
        axis, values = _parse_sweep(args.sweep)
        sweep = bench.run_sweep(
            scn, axis, values, reps=args.reps,
            algorithm=args.algorithm, threads=args.threads)
        results.append(sweep)
        violated |= any(row["cert_pass_rate"] < 1.0 for row in sweep.rows)
        for msg in sweep.failures:
            print("sweep point failed: %s" % msg, file=sys.stderr)
    paths = bench.emit_outputs(results, args.out)
    for p in paths:
        print(p)
    if violated:
        print("certificate violation detected", file=sys.stderr)
        return EXIT_CERTIFICATE
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _simulate(args)
        parser.error("unknown command %r" % args.command)
    except SourceScopeError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
