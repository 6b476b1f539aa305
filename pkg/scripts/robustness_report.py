"""Simplified versus full plant on a robustness scenario: channel differences over time."""

import argparse

import numpy as np

from clfcascade.analysis import STATE_CHANNELS, clf_monotone_after, robustness_compare, tracking_errors
from clfcascade.harness import load_scenario, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", nargs="?", default="robustness")
    ap.add_argument("--every", type=float, default=2.5, help="report interval (s)")
    args = ap.parse_args()
    sc = load_scenario(args.scenario)
    if sc.robustness is None:
        raise SystemExit(f"{sc.name} has no robustness section")
    ref = run_scenario(sc, plant="simplified")
    full = run_scenario(sc)
    n = min(len(ref), len(full))
    stride = max(1, int(round(args.every / sc.dt)))
    print("t       " + "".join(f"{c:>12s}" for c in STATE_CHANNELS))
    for i in range(0, n, stride):
        d = [abs(ref[c][i] - full[c][i]) for c in STATE_CHANNELS]
        print(f"{ref['t'][i]:<8.2f}" + "".join(f"{x:12.4g}" for x in d))
    verdict = robustness_compare(ref, full, sc.robustness, sc.program, sc.t_final)
    print(f"\nverdict: {verdict.label}")
    for r in verdict.reasons:
        print(f"  {r}")
    for name, lg in (("simplified", ref), ("full", full)):
        th, pt = tracking_errors(lg, sc.program)
        print(f"{name}: final errors {abs(th[-1]):.3e}/{abs(pt[-1]):.3e}, "
              f"V non-increasing from t={clf_monotone_after(lg['t'], lg['V']):.3f}, "
              f"max V {np.max(lg['V']):.3e}")


if __name__ == "__main__":
    main()
