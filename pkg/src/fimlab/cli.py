"""Command-line entry point: ``fimlab run``, ``fimlab list``, ``fimlab schema``.

Exit codes: 0 success, 2 configuration error, 3 study error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import experiments
from .exceptions import FimlabError, InvalidOverride, UnknownExperiment
from .tables import FORMATS, emit

EXIT_OK, EXIT_CONFIG, EXIT_STUDY = 0, 2, 3


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="fimlab", description="Fisher information experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file or by name")
    run.add_argument("config", help="path to a JSON config, or an experiment name")
    run.add_argument("--seed", type=_seed, default=None, help="master seed (overrides the config)")
    run.add_argument("--reps", type=_positive, default=None, help="replication count override")
    run.add_argument("--threads", type=_positive, default=1, help="worker threads; never changes results")
    run.add_argument("--format", choices=FORMATS, default="csv")
    run.add_argument("--out", default=None, help="output file (stdout when omitted)")
    run.add_argument("--scale", choices=("desk", "paper"), default=None)

    sub.add_parser("list", help="list experiments")
    sub.add_parser("schema", help="print the config schema and per-experiment override types")
    return parser


def load_config(arg):
    """Parse a config file, or wrap a bare experiment name."""
    path = Path(arg)
    if path.is_file():
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidOverride(f"{arg}: invalid JSON ({exc})") from exc
        except OSError as exc:
            raise InvalidOverride(f"cannot read {arg}: {exc}") from exc
    if arg in experiments.EXPERIMENTS:
        return {"experiment": arg}
    if arg.endswith(".json") or path.suffix:
        raise InvalidOverride(f"config file {arg} not found")
    raise UnknownExperiment(f"unknown experiment {arg!r}")


def _run(args):
    config = load_config(args.config)
    exp, overrides, cfg_scale, _ = experiments.validate_config(config)
    scale = args.scale or cfg_scale
    params = exp.resolve(overrides, scale, args.reps)
    if scale == "paper":
        minutes = exp.estimated_seconds(params) / 60.0 / args.threads
        print(f"warning: paper-scale {exp.name} needs roughly {minutes:.0f} min of compute", file=sys.stderr)
    start = time.perf_counter()
    table = experiments.run(config, threads=args.threads, reps=args.reps, seed=args.seed, scale=args.scale)
    elapsed = time.perf_counter() - start
    emit(table, args.format, args.out)
    print(f"{exp.name}: {elapsed:.1f} s", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, table, desc in experiments.list_experiments():
                print(f"{name}\t{table}\t{desc}")
        elif args.command == "schema":
            doc = {"config": experiments.CONFIG_SCHEMA, "overrides": experiments.override_schema()}
            print(json.dumps(doc, indent=2, sort_keys=True))
        else:
            _run(args)
    except (UnknownExperiment, InvalidOverride) as exc:
        print(f"config error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FimlabError as exc:
        print(f"study error: {exc}", file=sys.stderr)
        return EXIT_STUDY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
