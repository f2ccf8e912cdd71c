"""Command line front end for the experiment runner.

    glearning run --config exp.ini [--out DIR] [--workers N] [--seed S]
    glearning sweep --config exp.ini --ks 1e-3,1e-4 [--label g] [--workers N]
    glearning validate --config exp.ini

``GLEARNING_WORKERS`` overrides the config's worker count when ``--workers``
is not given.
"""

import argparse
import sys
from pathlib import Path

from .runner import ConfigError, emit_csv, k_sweep, load_config, run_experiment, validate_config


def _ks(text):
    try:
        ks = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not ks or any(k <= 0 for k in ks):
        raise argparse.ArgumentTypeError("need one or more positive values")
    return ks


def build_parser():
    parser = argparse.ArgumentParser(prog="glearning", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every configured algorithm and write CSV files")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, help="output directory (default: the config's run.output)")
    run.add_argument("--workers", type=int)
    run.add_argument("--seed", type=int, help="override run.seed")

    sweep = sub.add_parser("sweep", help="pick the linear beta coefficient k from preliminary runs")
    sweep.add_argument("--config", required=True, type=Path)
    sweep.add_argument("--ks", required=True, type=_ks, help="comma-separated candidates, e.g. 1e-3,1e-4")
    sweep.add_argument("--label", help="algorithm section to sweep (default: first G-learning section)")
    sweep.add_argument("--workers", type=int)

    validate = sub.add_parser("validate", help="check a config file without running it")
    validate.add_argument("--config", required=True, type=Path)
    return parser


def _load(path):
    try:
        cfg = load_config(path)
    except (OSError, ConfigError) as exc:
        raise SystemExit(f"error: cannot load {path}: {exc}")
    problems = validate_config(cfg)
    return cfg, problems


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg, problems = _load(args.config)
    if args.command == "validate":
        if problems:
            for p in problems:
                print(f"invalid: {p}")
            return 1
        print(f"ok: {len(cfg.algorithms)} algorithms, {cfg.runs} runs x {cfg.iterations} iterations")
        return 0
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1

    if args.command == "sweep":
        try:
            res = k_sweep(cfg, args.ks, label=args.label, workers=args.workers)
        except (KeyError, StopIteration):
            print("error: no matching G-learning section to sweep", file=sys.stderr)
            return 1
        for k, cost in res.costs.items():
            mark = "  <- chosen" if k == res.chosen else ""
            print(f"k={k:g}\tcost={cost:.6f}{mark}")
        return 0

    result = run_experiment(cfg, workers=args.workers, seed=args.seed)
    for label, res in result.sweeps.items():
        print(f"{label}: sweep chose k={res.chosen:g}")
    for path in emit_csv(result, args.out):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
