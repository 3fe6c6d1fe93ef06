"""fockscope command line: run named experiments, write reports.

    fockscope run <experiment> --config <path> --out <dir>
                  [--seed <u64>] [--threads <n>]
    fockscope list

FOCKSCOPE_OUT overrides --out.  Exit status: 0 pass, 1 configuration or
I/O error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config, resolve_out_dir
from .experiments import EXPERIMENTS, run_experiment
from .report import emit_report


def build_parser():
    parser = argparse.ArgumentParser(prog="fockscope")
    sub = parser.add_subparsers(dest="command")
    runp = sub.add_parser("run", help="run one experiment")
    runp.add_argument("experiment")
    runp.add_argument("--config", required=True)
    runp.add_argument("--out", default=None)
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--threads", type=int, default=None)
    sub.add_parser("list", help="list experiments and their check tags")
    return parser


def cmd_list():
    for name in sorted(EXPERIMENTS):
        print("%-16s %s" % (name, EXPERIMENTS[name]["describe"]))
    return 0


def cmd_run(args):
    if args.experiment not in EXPERIMENTS:
        print("error: unknown experiment '%s' (see 'fockscope list')"
              % args.experiment, file=sys.stderr)
        return 1
    entry = EXPERIMENTS[args.experiment]
    try:
        config = load_config(args.config, args.experiment, entry["schema"],
                             randomized=entry["randomized"]
                             and args.seed is None)
        if args.seed is not None:
            config.values[("run", "seed")] = args.seed
        if args.threads is not None:
            config.values[("run", "threads")] = args.threads
        out_dir = resolve_out_dir(args.out, config)
    except (ConfigError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    if entry["randomized"] and config.get("run", "seed") is None:
        print("error: randomized experiment '%s' requires a seed"
              % args.experiment, file=sys.stderr)
        return 1
    rows, summary, figures, digests = run_experiment(args.experiment, config)
    try:
        status = emit_report(rows, summary, config, digests, out_dir,
                             figures if config.get("run", "figures")
                             else None)
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    n_failed = sum(1 for r in rows if not r.passed)
    print("%s: %d checks, %d failed -> %s"
          % (args.experiment, len(rows), n_failed, out_dir))
    return status


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        return cmd_list()
    if args.command == "run":
        return cmd_run(args)
    parser.print_help()
    return 1


if __name__ == "__main__":
    sys.exit(main())
