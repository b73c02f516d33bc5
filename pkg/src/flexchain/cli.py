"""Command-line front end.

    flexchain simulate --config run.yaml --out results/
    flexchain check    --config run.yaml
    flexchain modes    --config run.yaml
    flexchain validate [--seed 7]

--step and --t-end override the config's integrator block.  Log verbosity
is taken from the FLEXCHAIN_LOG environment variable (DEBUG, INFO,
WARNING, ...; default WARNING).

Exit status: 0 success, 1 solver/validation failure (a state dump is
written next to the outputs), 2 configuration errors (each printed with
its field path).
"""

import argparse
import logging
import os
import sys

from . import scenario


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="flexchain",
        description="simulate serial chains of flexible links")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, needs_config in (("simulate", True), ("check", True),
                               ("modes", True), ("validate", False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config,
                       help="scenario YAML file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--step", type=float, default=None,
                       help="override integrator step [s]")
        p.add_argument("--t-end", type=float, default=None,
                       help="override end time [s]")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized validation suites")
    return ap


def main(argv=None):
    level = os.environ.get("FLEXCHAIN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)

    config = None
    if args.config is not None:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print("cannot read config: %s" % exc, file=sys.stderr)
            return 2
        try:
            config = scenario.parse_config(text)
        except scenario.ConfigError as exc:
            for err in exc.errors:
                print("config error: %s" % err, file=sys.stderr)
            return 2
    elif args.subcommand != "validate":
        print("config error: --config is required for %s" % args.subcommand,
              file=sys.stderr)
        return 2

    if config is not None:
        if args.step is not None:
            if args.step <= 0:
                print("config error: --step must be positive",
                      file=sys.stderr)
                return 2
            config.step = args.step
        if args.t_end is not None:
            if args.t_end < 0:
                print("config error: --t-end must be >= 0", file=sys.stderr)
                return 2
            config.t_end = args.t_end

    return scenario.run(config, args.subcommand, out_dir=args.out,
                        seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
