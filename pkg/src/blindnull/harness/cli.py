"""Command line entry point: ``blindnull {learn,sweep,validate}``.

Exit codes: 0 success, 1 validation failure, 2 config error, 3 runtime error.
"""

import argparse
import sys

from .config import ConfigError, ExperimentConfig, load_config
from .runner import aggregate_path, format_arms, run_learn, run_sweep, run_validate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = argparse.ArgumentParser(prog="blindnull", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("learn", "run one learning session and write the reconstructed Gram"),
        ("sweep", "Monte Carlo rate comparison of SCS, FDD and baselines"),
        ("validate", "statistical checks of DoF preservation and effective-channel whiteness"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="config file (key = value lines) or a previous output CSV")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override output_path")
        p.add_argument("--beacon", help="override beacon mode")
        p.add_argument("--N", dest="cycle_length", type=int, help="override cycle_length")
        p.add_argument("--trials", type=int, help="override trials")
        p.add_argument("--workers", type=int, help="override workers")
    return parser


def resolve_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {
        "seed": args.seed,
        "output_path": args.out,
        "beacon": args.beacon,
        "cycle_length": args.cycle_length,
        "trials": args.trials,
        "workers": args.workers,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return cfg.replace(**overrides) if overrides else cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "learn":
            res = run_learn(cfg)
            print(
                f"relative_error={res.relative_error:.3e} null_dim={res.null_basis.shape[1]} "
                f"cycles={res.learning_cycles} -> {cfg.output_path}"
            )
            return EXIT_OK
        if args.command == "sweep":
            rows, _ = run_sweep(cfg)
            print(f"{len(rows)} rows -> {cfg.output_path}, {aggregate_path(cfg.output_path)}")
            return EXIT_OK
        arms = run_validate(cfg)
        print(format_arms(arms))
        ok = all(a.passed for a in arms)
        print("OVERALL PASS" if ok else "OVERALL FAIL")
        return EXIT_OK if ok else EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - any failure inside a run maps to the runtime exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
