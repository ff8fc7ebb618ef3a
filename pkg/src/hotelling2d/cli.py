"""Command-line interface for scenario runs."""

from __future__ import annotations

import argparse
import sys

from .scenario import EXIT_CONFIG, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hotelling2d",
        description=(
            "Solve price and location equilibria for spatial competition "
            "with sequential entry on the unit square."
        ),
    )
    parser.add_argument("--config", required=True, help="scenario TOML file")
    parser.add_argument("--out-dir", default=".", help="directory for result files")
    parser.add_argument("--n", type=int, help="override entry.n_max")
    parser.add_argument("--market-size", type=float, help="solve a single market size M")
    parser.add_argument(
        "--sweep", metavar="LO:HI:STEPS", help="override market sizes with a linear sweep"
    )
    parser.add_argument("--figures", action="store_true", help="write SVG figures")
    parser.add_argument("--seed", type=int, help="override entry.seed")
    parser.add_argument("--threads", type=int, default=1, help="parallel cases across n")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.n is not None:
        if not 1 <= args.n <= 7:
            print("config error: field '--n' must be between 1 and 7")
            return EXIT_CONFIG
        overrides["n_max"] = args.n
    if args.market_size is not None:
        if args.market_size <= 0:
            print("config error: field '--market-size' must be positive")
            return EXIT_CONFIG
        overrides["M_values"] = [args.market_size]
    if args.sweep is not None:
        try:
            lo, hi, steps = args.sweep.split(":")
            lo, hi, steps = float(lo), float(hi), int(steps)
            if not (0 < lo < hi and steps >= 2):
                raise ValueError
        except ValueError:
            print("config error: field '--sweep' must be LO:HI:STEPS with 0 < lo < hi")
            return EXIT_CONFIG
        import numpy as np

        overrides["M_values"] = list(np.linspace(lo, hi, steps))
    if args.figures:
        overrides["out_svg"] = True
    if args.seed is not None:
        overrides["seed"] = args.seed

    return run_scenario(
        args.config, args.out_dir, overrides=overrides, threads=args.threads
    )


if __name__ == "__main__":
    sys.exit(main())
