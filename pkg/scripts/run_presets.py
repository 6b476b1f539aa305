"""Run every shipped preset and print a one-line status per run."""

import argparse
import sys

from clfcascade.cli import main as cli_main
from clfcascade.harness import PRESETS, load_scenario, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None)
    ap.add_argument("--only", nargs="*", default=None)
    args = ap.parse_args()
    worst = 0
    for name in args.only or PRESETS:
        if name == "demo2d":
            status = cli_main(["demo2d"] + (["--out", args.out] if args.out else []))
        else:
            res = run_experiment(load_scenario(name), args.out)
            status = res.status
            print(f"{name:16s} exit={status} {res.message}")
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    sys.exit(main())
