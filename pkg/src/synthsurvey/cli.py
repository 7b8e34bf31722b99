"""Command-line entry point: ``synthsurvey <verb> --config experiment.yaml``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .gateway import GatewayError
from .workflows import COMMANDS, Session, cmd_synth_data, write_result

log = logging.getLogger("synthsurvey")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment YAML file (defaults apply when omitted)")
    common.add_argument("--cache", type=Path, help="JSONL response cache; reused across runs")
    common.add_argument("--offline", action="store_true", help="never contact a remote endpoint; cache and mock only")
    common.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory (default: out)")
    common.add_argument("--plots", action="store_true", help="also render SVG figures (needs matplotlib)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="synthsurvey", description="Synthetic inflation-survey experiments.")
    sub = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "calibrate": "temperature sweep against the benchmark survey",
        "run": "raw responses for every configured horizon",
        "profile": "horizon profile with conditioned/unconditioned effects",
        "decompose": "naive and Shapley decomposition of the scenario",
        "scan": "sensitivity curves and slope/weight ratios",
        "regress": "demographic WLS regressions and similarity statistics",
        "probe": "knowledge-cutoff probes and model trend",
    }
    for verb, text in helps.items():
        sub.add_parser(verb, parents=[common], help=text)
    synth = sub.add_parser("synth-data", parents=[common], help="write synthetic microdata")
    synth.add_argument("--n", type=int, help="number of respondents")
    synth.add_argument("--seed", type=int, help="random seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return 2

    if args.verb == "synth-data":
        path = cmd_synth_data(config, args.out_dir, args.n, args.seed)
        print(path)
        return 0

    try:
        session = Session(config, args.cache, args.offline)
        result = COMMANDS[args.verb](session)
    except GatewayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log.info("%s", session.cache_stats())
    for p in write_result(result, args.out_dir):
        print(p)
    if args.plots:
        from .plots import render

        for p in render(result, args.out_dir):
            print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
