"""Command-line entry point: ``spacecl train|sweep|analyze|gen-instances``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import analyze_run
from .config import load_config
from .envs import ENV_KINDS, sample_instances
from .errors import ConfigError
from .harness import ablation_sweep, run_experiment


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacecl", description="Self-paced curricula for contextual RL")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one experiment")
    train.add_argument("--config", required=True)
    train.add_argument("--seed-list", type=_int_list)
    train.add_argument("--out")
    train.add_argument("--jobs", type=int, default=1)

    sweep = sub.add_parser("sweep", help="eta x kappa ablation grid")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--eta", type=_float_list, required=True)
    sweep.add_argument("--kappa", type=_float_list, required=True)
    sweep.add_argument("--out")
    sweep.add_argument("--jobs", type=int, default=1)

    analyze = sub.add_parser("analyze", help="curriculum analytics for a finished run")
    analyze.add_argument("--run", required=True)

    gen = sub.add_parser("gen-instances", help="sample an instance set to CSV")
    gen.add_argument("--env", required=True, choices=ENV_KINDS)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    return parser


def _load(args):
    config = load_config(args.config)
    changes = {}
    if getattr(args, "seed_list", None):
        changes["seeds"] = args.seed_list
    if args.out:
        changes["output_dir"] = args.out
    return config.replace(**changes) if changes else config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "train":
            artifacts = run_experiment(_load(args), jobs=args.jobs)
            finals = artifacts.final_mean("test_mean_return")
            print(f"wrote {artifacts.output_dir}; final test mean return per seed: {finals}")
        elif args.command == "sweep":
            cells = ablation_sweep(_load(args), args.eta, [int(k) if k.is_integer() else k for k in args.kappa], jobs=args.jobs)
            failed = sum(c.status != "ok" for c in cells)
            print(f"{len(cells)} cells, {failed} failed")
        elif args.command == "analyze":
            print(analyze_run(Path(args.run)))
        elif args.command == "gen-instances":
            instances = sample_instances(args.env, args.n, args.seed)
            instances.write_csv(args.out)
            print(f"wrote {len(instances)} {args.env} instances to {args.out}")
    except ConfigError as exc:
        print("config error: " + "; ".join(exc.problems), file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
