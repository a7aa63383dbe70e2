"""Command-line front end.

Four subcommands: `run` executes an experiment config, `ratios` measures the
shaped-versus-scratch benefit of a design, `plot` renders artifacts from
summaries and logs, and `replay` audits a run log.  Exit codes: 0 success,
1 failure, 3 nothing to do.
"""

import argparse
import json
import sys

import numpy as np

from .experiment import ConfigError, ExperimentConfig, emit_plots, ratio_report, run_experiment
from .loop import ReplayError, replay
from .shaping import SubgoalDesign


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="besd",
        description="Cost-aware subgoal-design optimization for sparse-reward "
                    "environment distributions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.add_argument("--out", default="runs", help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="run only this seed, overriding the config")

    p_ratio = sub.add_parser("ratios",
                             help="shaped-vs-scratch benefit of a design")
    p_ratio.add_argument("--domain", required=True)
    p_ratio.add_argument("--design", default=None,
                         help="path to a design JSON; omit for a null design")
    p_ratio.add_argument("--trials", type=int, default=200)
    p_ratio.add_argument("--tau", type=int, default=None,
                         help="training interactions per arm")
    p_ratio.add_argument("--window", type=int, default=None,
                         help="measurement window in steps")
    p_ratio.add_argument("--seed", type=int, default=0)

    p_plot = sub.add_parser("plot", help="render curves and path files")
    p_plot.add_argument("paths", nargs="*",
                        help="summary CSVs and/or run logs")
    p_plot.add_argument("--out", default="plots", help="output directory")

    p_replay = sub.add_parser("replay", help="audit a run log")
    p_replay.add_argument("log", help="path to a JSON-lines run log")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            with open(args.config, encoding="utf-8") as fh:
                config = ExperimentConfig.from_json(fh.read())
            out = run_experiment(config, args.out, seed_override=args.seed)
            print(f"summary: {out['summary']}")
            for path in out["logs"]:
                print(f"log: {path}")
            return 0
        if args.command == "ratios":
            design = None
            if args.design is not None:
                with open(args.design, encoding="utf-8") as fh:
                    design = SubgoalDesign.from_json(fh.read())
            ratio = ratio_report(args.domain, design, trials=args.trials,
                                 tau=args.tau, window=args.window,
                                 rng=np.random.default_rng(args.seed))
            print(f"{args.domain} ratio over {args.trials} trials: {ratio:.4f}")
            return 0
        if args.command == "plot":
            written = emit_plots(args.paths, args.out)
            if written is None:
                print("nothing to do: no input paths", file=sys.stderr)
                return 3
            for path in written:
                print(f"wrote: {path}")
            return 0
        if args.command == "replay":
            summary = replay(args.log)
            print(json.dumps(summary, indent=2, sort_keys=True))
            return 0
    except (ConfigError, ReplayError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
