"""Command line entry point: ``nvsim run|list|validate|version``.

Exit codes: 0 success, 2 invalid scenario or usage, 3 computation failure,
4 file-system failure, 5 map written with flagged cells.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .runner import run
from .scenario import ScenarioError, list_scenarios, load_scenario, resolve

EXIT_OK, EXIT_SCENARIO, EXIT_COMPUTE, EXIT_IO, EXIT_FLAGGED = 0, 2, 3, 4, 5
DEFAULT_OUT = "nvsim-out"


def _parser():
    ap = argparse.ArgumentParser(prog="nvsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or shipped scenario name")
    r.add_argument("scenario")
    r.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    r.add_argument("--out", default=None, help=f"output directory (default: $NVSIM_OUT or ./{DEFAULT_OUT})")
    sub.add_parser("list", help="list shipped scenarios")
    v = sub.add_parser("validate", help="parse and validate without computing")
    v.add_argument("scenario")
    sub.add_parser("version", help="print the version")
    return ap


def _load(name):
    return load_scenario(resolve(name))


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(f"nvsim {__version__}")
        return EXIT_OK
    if args.command == "list":
        for entry in list_scenarios():
            print(f"{entry.name:8s} {entry.description}")
        return EXIT_OK
    try:
        scenario = _load(args.scenario)
    except ScenarioError as exc:
        print(f"nvsim: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    if args.command == "validate":
        print(f"ok {scenario.name} task={scenario.task} fingerprint={scenario.fingerprint}")
        return EXIT_OK
    if args.threads is not None and args.threads < 1:
        print("nvsim: --threads must be >= 1", file=sys.stderr)
        return EXIT_SCENARIO
    out = args.out or os.environ.get("NVSIM_OUT") or DEFAULT_OUT
    try:
        result = run(scenario, out, args.threads)
    except OSError as exc:
        print(f"nvsim: i/o error in {scenario.task}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"nvsim: computation failed in {scenario.task}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    print(result.summary())
    return EXIT_FLAGGED if result.flagged else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
