import argparse
import logging
import sys
from typing import List, Optional

from coauthor import load_config
from coauthor.exceptions import CheckpointNotFoundError, ConfigError

from .experiments import analyze, calibrate, run_baseline, run_sweep, run_train

logger = logging.getLogger("simulation")

EXIT_CONFIG_ERROR = 2
EXIT_MISSING_CHECKPOINT = 3

# --profile desk|paper picks the evaluation or training preset of that scale
PROFILES = {
    "desk": {"eval": "desk-eval", "train": "desk-train"},
    "paper": {"eval": "eval", "train": "train"},
}


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m simulation",
                                     description="Co-authorship ultimatum simulations.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    def with_config(sub: argparse.ArgumentParser) -> argparse.ArgumentParser:
        sub.add_argument("--config", help="INI or JSON configuration file")
        sub.add_argument("--seed", type=int, help="master seed")
        sub.add_argument("--out", default="out", help="output directory")
        sub.add_argument("--profile", choices=sorted(PROFILES), help="population scale preset")
        return sub

    with_config(commands.add_parser("baseline", help="pure-greedy longitudinal run"))
    with_config(commands.add_parser("train", help="train the strategic policy"))
    sweep = with_config(commands.add_parser("sweep", help="runs from 0%% to 100%% strategic agents"))
    sweep.add_argument("--checkpoint", help="trained network")
    sweep.add_argument("--parallel", type=int, default=1, help="concurrent runs")
    sweep.add_argument("--replicates", type=int, help="runs per composition")
    calib = with_config(commands.add_parser("calibrate", help="measure greedy behavior against target bands"))
    calib.add_argument("--seeds", type=int, default=5)
    analyze_cmd = commands.add_parser("analyze", help="rebuild tables from run records")
    analyze_cmd.add_argument("logdir")
    analyze_cmd.add_argument("--out", help="table directory, LOGDIR by default")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        if args.command == "analyze":
            analyze(args.logdir, args.out)
            return 0
        kind = "train" if args.command == "train" else "eval"
        profile = PROFILES[args.profile][kind] if args.profile else None
        config = load_config(args.config, profile=profile, seed=args.seed)
        if args.command == "baseline":
            run_baseline(config, args.out)
        elif args.command == "train":
            run_train(config, args.out)
        elif args.command == "sweep":
            run_sweep(config, args.checkpoint, args.out, parallel=args.parallel, replicates=args.replicates)
        elif args.command == "calibrate":
            calibrate(config, args.out, seeds=args.seeds)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG_ERROR
    except CheckpointNotFoundError as exc:
        logger.error("%s", exc)
        return EXIT_MISSING_CHECKPOINT
    return 0


if __name__ == "__main__":
    sys.exit(main())
