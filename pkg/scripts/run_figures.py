"""Run every shipped scenario (or the named ones) and print one summary line each.

Usage: python scripts/run_figures.py [--out DIR] [--threads N] [name ...]
"""
import argparse
import sys
import time

from nvsim.runner import run
from nvsim.scenario import list_scenarios, load_scenario, resolve


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="scenario names (default: all shipped)")
    ap.add_argument("--out", default="figures-out")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    names = args.names or [e.name for e in list_scenarios()]
    status = 0
    start = time.perf_counter()
    for name in names:
        result = run(load_scenario(resolve(name)), args.out, threads=args.threads)
        print(f"{name:6s} {result.summary()}")
        if result.flagged:
            status = 5
    print(f"total {time.perf_counter() - start:.1f} s")
    return status


if __name__ == "__main__":
    sys.exit(main())
