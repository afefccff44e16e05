"""Command line: one subcommand per experiment.

    python -m phasekey rate_vs_q --seed 7 --trials 500 --out results --override snr_db=20,25
"""

from __future__ import annotations

import argparse
import sys

from .harness import EXPERIMENTS, load_config, run_experiment, write_results


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasekey", description="Run a key-generation experiment and write CSV.")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} sweep")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
        p.add_argument("--out", help="output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.override)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return 2
        overrides.append(f"seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"trials={args.trials}")
    if args.out is not None:
        overrides.append(f"out={args.out}")
    try:
        cfg = load_config(args.experiment, args.config, overrides)
        rows = run_experiment(cfg)
        csv_path, manifest = write_results(cfg, rows)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(csv_path)
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
