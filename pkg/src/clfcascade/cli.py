"""Command-line entry point: ``clfcascade {run,demo2d,verify,sweep}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import yaml

from clfcascade import canonical_2d as c2d
from clfcascade.errors import ScenarioError
from clfcascade.harness import (
    EXIT_ERROR,
    EXIT_FAIL,
    EXIT_PASS,
    PRESETS,
    load_scenario,
    output_root,
    preset_text,
    run_experiment,
    run_sweep,
)


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    res = run_experiment(sc, args.out)
    print(f"{sc.name}: {res.message}")
    if res.metrics is not None:
        m = res.metrics
        print(f"  final |theta_err| = {m.final_theta_err:.3e}  final |pitch_err| = {m.final_pitch_err:.3e}")
    if res.verdict is not None:
        print(f"  robustness verdict: {res.verdict['verdict']}")
    for f in res.files:
        print(f"  wrote {f}")
    return res.status


def load_demo2d(ref: str) -> dict:
    text = preset_text("demo2d") if ref == "demo2d" else Path(ref).read_text()
    data = yaml.safe_load(text)
    for k in ("a1", "a2"):
        if not data.get(k, -1.0) < 0:
            raise ScenarioError(f"{k}: gain must be negative")
    return data


def _cmd_demo2d(args) -> int:
    cfg = load_demo2d(args.config)
    sys_ = c2d.demo_system(cfg.get("a1", -1.0), cfg.get("a2", -2.0))
    tr = c2d.simulate_2d(sys_, cfg.get("x0", [2.0, -1.0]), cfg.get("t_final", 10.0), cfg.get("dt", 1e-3))
    root = output_root(args.out) / cfg.get("name", "demo2d")
    root.mkdir(parents=True, exist_ok=True)
    path = root / "trajectory_2d.csv"
    cols = tr.columns()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(cols))
        for i in range(len(tr.t)):
            w.writerow(["%.17g" % cols[c][i] for c in cols])
    ok = bool((tr.dV <= 0).all())
    print(f"demo2d: final V = {tr.V[-1]:.3e}, max dV/dt = {tr.dV.max():.3e}")
    print(f"  wrote {path}")
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_verify(args) -> int:
    from clfcascade import verification

    ok = True
    for check in verification.CHECKS:
        r = check()
        ok &= r.passed
        print(r.line(), flush=True)
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    param = args.param or (sc.sweep.param if sc.sweep else None)
    values = args.values or (sc.sweep.values if sc.sweep else None)
    if param is None or values is None:
        raise ScenarioError("sweep needs --param and --values unless the scenario defines a sweep")
    worst = EXIT_PASS
    for val, res in run_sweep(sc, param, values, args.out):
        print(f"{param}={val:g}: {res.message}")
        worst = max(worst, res.status)
    return worst


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clfcascade", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a preset or scenario file")
    r.add_argument("scenario", help=f"preset ({', '.join(p for p in PRESETS if p != 'demo2d')}) or YAML path")
    r.add_argument("--out", help="output directory (default $CLFCASCADE_OUTPUT_DIR or ./runs)")
    r.set_defaults(func=_cmd_run)

    d = sub.add_parser("demo2d", help="planar curve-tracking demonstration")
    d.add_argument("config", nargs="?", default="demo2d")
    d.add_argument("--out")
    d.set_defaults(func=_cmd_demo2d)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.set_defaults(func=_cmd_verify)

    s = sub.add_parser("sweep", help="run a scenario over several values of one parameter")
    s.add_argument("scenario")
    s.add_argument("--param", help="dotted path, e.g. gains.a1 or aircraft.xp")
    s.add_argument("--values", type=float, nargs="+")
    s.add_argument("--out")
    s.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
