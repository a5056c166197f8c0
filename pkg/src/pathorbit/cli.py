"""Command-line scenario runner.

Verbs:
    run <config|builtin>            write csv / svg / metrics artifacts
    list [--json]                   show the built-in scenarios
    sweep <config|builtin> --param P --values a,b,c

Output goes to OF_OUTPUT_DIR when set, else the working directory.
Exit codes: 0 ok, 2 config error, 3 divergence.
"""
import argparse
import json
import os
import sys

from .scenarios import (ConfigError, SWEEP_PARAMETERS, builtin_scenarios,
                        load_scenario, run_scenario, sweep)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pathorbit",
        description="Path-following scenario runner: simulate, plot, and sweep.",
    )
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized seeding modes (default 0)")
    parser.add_argument("--output-dir", default=None,
                        help="output directory (default: $OF_OUTPUT_DIR or '.')")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run a builtin scenario or a config file")
    p_run.add_argument("scenario", help="builtin name or path to a config file")

    p_list = sub.add_parser("list", help="list builtin scenarios")
    p_list.add_argument("--json", action="store_true", help="machine-readable listing")

    p_sweep = sub.add_parser("sweep", help="run a scenario once per parameter value")
    p_sweep.add_argument("scenario", help="builtin name or path to a config file")
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated parameter values")
    p_sweep.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    outdir = args.output_dir or os.environ.get("OF_OUTPUT_DIR", ".")

    if args.verb == "list":
        table = builtin_scenarios()
        if args.json:
            print(json.dumps(
                {"scenarios": [{"name": n, "description": s.description}
                               for n, s in table.items()]},
                indent=2))
        else:
            width = max(len(n) for n in table)
            for name, sc in table.items():
                print(f"{name:<{width}}  {sc.description}")
        return EXIT_OK

    if args.verb == "run":
        try:
            scenario = load_scenario(args.scenario)
            result = run_scenario(scenario, outdir=outdir, seed=args.seed)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for f in result.files:
            print(f"wrote {f}")
        print(json.dumps(result.metrics, indent=2, sort_keys=True))
        if result.diverged:
            last_t = max(float(tr.t[-1]) for tr in result.trajectories)
            print(f"run diverged; last recorded time {last_t:g} s", file=sys.stderr)
            return EXIT_DIVERGED
        return EXIT_OK

    if args.verb == "sweep":
        try:
            values = [float(tok) for tok in args.values.split(",") if tok.strip()]
        except ValueError:
            print(f"cannot parse --values {args.values!r}", file=sys.stderr)
            return EXIT_CONFIG
        if not values:
            print("no sweep values given", file=sys.stderr)
            return EXIT_CONFIG
        try:
            scenario = load_scenario(args.scenario)
            rows, path = sweep(scenario, args.param, values,
                               outdir=outdir, workers=args.workers)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"wrote {path}")
        for value, row in zip(values, rows):
            print(f"{args.param}={value:g}: {row['status']}"
                  + (f" ({row['reason']})" if row.get("reason") else ""))
        return EXIT_OK

    return EXIT_CONFIG  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
