"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 worked-example mismatch, 3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

import yaml

from .config import ExperimentFile, parse_experiment
from .errors import ConfigError, ModelError
from .figures import replicate_figure
from .harness import SweepSpec, sweep
from .results import emit_results, envelope_for_monte_carlo, envelope_for_sweep, to_csv, to_json
from .rng import RngPolicy
from .tasks import monte_carlo
from .worked import show_worked_examples

EXIT_OK, EXIT_VALIDATION, EXIT_GOLDEN, EXIT_IO = 0, 1, 2, 3


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nkcsim", description="Human-AI coevolutionary search simulator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), help="output format (default: config or csv)")
    common.add_argument("--out", help="output path (default: config output.path or stdout)")
    common.add_argument("--seed", type=_u64, help="master seed, overrides the config")
    common.add_argument("--runs", type=_positive, help="Monte Carlo runs per cell, overrides the config")
    common.add_argument("--workers", type=_positive, help="worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate a single cell")
    p.add_argument("config")
    p = sub.add_parser("sweep", parents=[common], help="simulate a two-axis grid")
    p.add_argument("config")
    p = sub.add_parser("figure", parents=[common], help="replicate a figure (3, 4, 5, 6 or 8)")
    p.add_argument("fig_id", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a figure parameter (repeatable)")
    p.add_argument("--out-dir", default=".", help="directory for data files and the SVG plot (--out is an alias)")
    sub.add_parser("examples", help="recompute the worked examples against pinned values")
    return parser


def _load(path: str, args) -> ExperimentFile:
    with open(path, encoding="utf-8") as fh:
        exp = parse_experiment(fh.read())
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.runs is not None:
        changes["n_runs"] = args.runs
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.format is not None:
        changes["output_format"] = args.format
    if args.out is not None:
        changes["output_path"] = args.out
    return dataclasses.replace(exp, **changes)


def _deliver(env, exp: ExperimentFile) -> None:
    if exp.output_path:
        n = emit_results(env, exp.output_format, exp.output_path)
        print(f"wrote {n} bytes to {exp.output_path}", file=sys.stderr)
    else:
        sys.stdout.write(to_csv(env) if exp.output_format == "csv" else to_json(env))


def _parse_overrides(items: list[str]) -> dict:
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError("syntax", f"expected KEY=VALUE, got {item!r}", key=item)
        out[key.strip()] = yaml.safe_load(raw)
    return out


def _command(args) -> int:
    if args.command == "examples":
        report, ok = show_worked_examples()
        print(report)
        return EXIT_OK if ok else EXIT_GOLDEN
    if args.command == "run":
        exp = _load(args.config, args)
        policy = RngPolicy(exp.master_seed)
        result = monte_carlo(exp.task, exp.n_runs, policy, exp.workers)
        _deliver(envelope_for_monte_carlo(exp.task, exp.n_runs, policy, result), exp)
        return EXIT_OK
    if args.command == "sweep":
        exp = _load(args.config, args)
        spec: SweepSpec = exp.sweep_spec()
        _deliver(envelope_for_sweep(spec, sweep(spec, workers=exp.workers)), exp)
        return EXIT_OK
    overrides = _parse_overrides(args.set)
    if args.runs is not None:
        overrides["n_runs"] = args.runs
    out_dir = args.out or args.out_dir
    out = replicate_figure(args.fig_id, overrides, RngPolicy(args.seed or 0), out_dir, args.workers or 1)
    for path in out.files:
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _command(args)
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
