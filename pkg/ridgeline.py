# ridgeline.py
"""
Command-line driver:

    python ridgeline.py gen         [--config PATH] [--seed N] [--out DIR] [--dry-run]
    python ridgeline.py fit         --data CSV --variant NP-ML [--config PATH] [--seed N] [--out DIR] [--dry-run]
    python ridgeline.py experiment  [--data DIR] [--config PATH] [--seed N] [--out DIR] [--jobs N] [--dry-run]
    python ridgeline.py predict     --model PATH --x q1,..,ddqn

Log level comes from RIDGELINE_LOG (.env is honored).
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.cli.commands import cmd_experiment, cmd_fit, cmd_gen, cmd_predict
from src.cli.config import apply_overrides, load_config
from src.utils.env import configure_logging
from src.utils.errors import RidgelineError

logger = logging.getLogger("ridgeline")


# -----------------------------------------
# Arguments
# -----------------------------------------

def _add_run_flags(sub: argparse.ArgumentParser, jobs: bool = False) -> None:
    sub.add_argument("--config", help="TOML run configuration")
    sub.add_argument("--seed", type=int, help="simulator seed (feature seed becomes N+1)")
    sub.add_argument("--out", help="output directory")
    if jobs:
        sub.add_argument("--jobs", type=int, help="models run in parallel")
    sub.add_argument("--dry-run", action="store_true", help="validate and print the plan, write nothing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridgeline",
        description="Online inverse-dynamics learning on a simulated two-link arm.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="simulate dataset_a.csv and dataset_b.csv")
    _add_run_flags(gen)

    fit = subs.add_parser("fit", help="fit one model on a dataset")
    fit.add_argument("--data", required=True, help="dataset CSV")
    fit.add_argument("--variant", required=True, help="run label, e.g. NP-ML or SP2-VS")
    _add_run_flags(fit)

    exp = subs.add_parser("experiment", help="run the task-transfer protocol")
    exp.add_argument("--data", help="directory holding dataset_a.csv and dataset_b.csv (simulated when omitted)")
    _add_run_flags(exp, jobs=True)

    pred = subs.add_parser("predict", help="predict torques for one state")
    pred.add_argument("--model", required=True, help="model JSON written by fit")
    pred.add_argument("--x", required=True, help="q1,..,qn,dq1,..,dqn,ddq1,..,ddqn")

    return parser


# -----------------------------------------
# Main
# -----------------------------------------

def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)

    try:
        if args.command == "predict":
            return cmd_predict(args.model, args.x)

        cfg = apply_overrides(
            load_config(args.config),
            seed=args.seed,
            out=args.out,
            jobs=getattr(args, "jobs", None),
        )
        if args.command == "gen":
            return cmd_gen(cfg, dry_run=args.dry_run)
        if args.command == "fit":
            return cmd_fit(cfg, args.data, args.variant, dry_run=args.dry_run)
        return cmd_experiment(cfg, data_dir=args.data, dry_run=args.dry_run)
    except RidgelineError as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
