"""Fitted decay rate of the flight-path error against a1, from an off-manifold start."""

import argparse

from clfcascade.analysis import compute_metrics
from clfcascade.harness import load_scenario, run_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="gain_sweep")
    ap.add_argument("--a1", type=float, nargs="+", default=None)
    ap.add_argument("--t-final", type=float, default=None)
    args = ap.parse_args()
    sc = load_scenario(args.scenario)
    if args.t_final:
        sc = sc.with_value("t_final", args.t_final)
    values = args.a1 or (sc.sweep.values if sc.sweep else [sc.gains.a1])
    print(f"{'a1':>8s} {'fitted':>10s} {'rel err':>9s} {'final':>10s} {'dp duty':>8s}")
    for a1 in values:
        run = sc.with_value("gains.a1", a1)
        m = compute_metrics(run_scenario(run), run.program, run.gains)
        rate = m.theta_decay_rate
        rel = abs(rate - a1) / abs(a1) if rate is not None else float("nan")
        print(f"{a1:8.3f} {rate if rate is not None else float('nan'):10.5f} {rel:9.2e} "
              f"{m.final_theta_err:10.2e} {m.duty_delta_p:8.3f}")


if __name__ == "__main__":
    main()
