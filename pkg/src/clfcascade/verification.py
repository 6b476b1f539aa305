"""Acceptance checks shared by the ``verify`` command and the test suite.

Each check returns a :class:`CriterionResult`; simulations are cached per
process so the monotonicity check reuses the runs of the convergence checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from clfcascade import canonical_2d as c2d
from clfcascade.aero_env import NOMINAL, air_density
from clfcascade.alpha_manifold import BRACKET, ManeuverProgram, residual_G, solve_alpha_command
from clfcascade.analysis import EmptyWindow, clf_increases, decay_rate, robustness_compare, tracking_errors
from clfcascade.closed_loop import TrajectoryLog, rk4_step
from clfcascade.dynamics import State
from clfcascade.harness import Scenario, load_scenario, parse_scenario, run_scenario, serialize_scenario

DECAY_GAIN_SETS = ((-0.5, -1.0, -2.0, -1.0), (-0.4, -1.5, -3.0, -1.2), (-0.3, -2.0, -4.0, -0.8))
FD_STEPS = {"dt": 1e-4, "dv": 1e-2, "dh": 1.0, "dtheta": 1e-4, "ddelta_p": 1e-4}
FD_FLOOR = 1e-7  # denominator floor for relative errors of near-zero partials


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.title}: {self.detail}"


@lru_cache(maxsize=None)
def _run_cached(text: str, plant: str | None) -> TrajectoryLog:
    return run_scenario(parse_scenario(text), plant)


def cached_run(sc: Scenario, plant: str | None = None) -> TrajectoryLog:
    return _run_cached(serialize_scenario(sc), plant)


def decay_scenarios() -> list[Scenario]:
    base = load_scenario("gain_sweep")
    out = []
    for g in DECAY_GAIN_SETS:
        sc = base
        for name, val in zip(("a1", "a2", "a3", "a4"), g):
            sc = sc.with_value(f"gains.{name}", val)
        out.append(replace(sc, sweep=None, name=f"decay_a1={g[0]:g}"))
    return out


# --------------------------------------------------------------------------- 1

def check_atmosphere() -> CriterionResult:
    rho0 = air_density(0.0)
    hs = np.arange(0, 20001, 1.0)
    rho = np.array([air_density(h) for h in hs])
    mono = bool(np.all(np.diff(rho) < 0))
    ok = rho0 == 1.2256 and mono
    return CriterionResult(1, "atmosphere", ok, f"rho(0)={rho0!r}, strictly decreasing on 0..20000 m: {mono}")


# --------------------------------------------------------------------------- 2

def _polished_root(f, guess: float) -> float:
    d = 1e-6
    while f(guess - d) * f(guess + d) > 0:
        d *= 2.0
        if d > 1.0:
            raise RuntimeError("oracle could not bracket the root")
    return brentq(f, guess - d, guess + d, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def sample_envelope_states(n: int, seed: int, prog: ManeuverProgram, a1: float, p=NOMINAL):
    """Random states whose alpha-command equation changes sign across the bracket."""
    rng = np.random.default_rng(seed)
    grid = np.linspace(BRACKET[0], BRACKET[1], 101)
    out = []
    rejected = 0
    while len(out) < n:
        t = rng.uniform(0.0, 30.0)
        v = rng.uniform(80.0, 300.0)
        h = rng.uniform(0.0, 12000.0)
        th = rng.uniform(-0.3, 0.3)
        dp = rng.uniform(-p.dp_max, p.dp_max)
        P = rng.uniform(p.P_min, p.P_max)
        s = State(v, th, 0.0, 0.0, h)
        g = np.array([residual_G(t, a, s, dp, P, prog, a1, p) for a in grid])
        if np.any(np.sign(g[:-1]) != np.sign(g[1:])):
            out.append((t, s, dp, P))
        else:
            rejected += 1
    return out, rejected


def check_manifold_solver(n: int = 1000, seed: int = 0) -> CriterionResult:
    sc = load_scenario("baseline")
    prog, a1, p = sc.program, sc.gains.a1, sc.aircraft
    states, rejected = sample_envelope_states(n, seed, prog, a1, p)
    worst_res = 0.0
    worst_rel = 0.0
    worst_at = ""
    for t, s, dp, P in states:
        cmd = solve_alpha_command(t, s, dp, P, prog, a1, p, warm_start=0.1)
        worst_res = max(worst_res, abs(residual_G(t, cmd.phi, s, dp, P, prog, a1, p)))
        base = {"dt": t, "dv": s.v, "dh": s.h, "dtheta": s.theta, "ddelta_p": dp}

        def phi_at(x: dict) -> float:
            st = State(x["dv"], x["dtheta"], 0.0, 0.0, x["dh"])
            return _polished_root(lambda a: residual_G(x["dt"], a, st, x["ddelta_p"], P, prog, a1, p), cmd.phi)

        for key, step in FD_STEPS.items():
            if key == "dh" and s.h < 2 * step:
                # three-point forward difference at the bottom of the atmosphere
                vals = [phi_at({**base, key: base[key] + k * step}) for k in range(3)]
                fd = (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * step)
            else:
                up = phi_at({**base, key: base[key] + step})
                dn = phi_at({**base, key: base[key] - step})
                fd = (up - dn) / (2 * step)
            an = getattr(cmd.partials, key)
            rel = abs(fd - an) / max(abs(an), FD_FLOOR)
            if rel > worst_rel:
                worst_rel, worst_at = rel, key
    ok = worst_res <= 1e-10 and worst_rel <= 1e-5
    return CriterionResult(
        2,
        "alpha-command solver",
        ok,
        f"{len(states)} states ({rejected} rejected without a root), max |G(phi)|={worst_res:.2e}, "
        f"max partial rel. error={worst_rel:.2e} ({worst_at})",
    )


# --------------------------------------------------------------------------- 3

def check_cascade_identity() -> CriterionResult:
    log = cached_run(load_scenario("baseline"))
    e9 = float(np.max(np.abs(log["eq9_residual"])))
    r4 = float(np.max(np.abs(log["stage4_residual"])))
    ok = log.ok and e9 <= 1e-9 and r4 <= 1e-9
    return CriterionResult(
        3, "cascade identity", ok, f"{len(log)} steps, max |q_cmd - a4*pitch_err|={e9:.2e}, max pitch-rate-law residual={r4:.2e}"
    )


# --------------------------------------------------------------------------- 4

def check_terminal_attractor() -> CriterionResult:
    parts = []
    ok = True
    for sc in decay_scenarios():
        log = cached_run(sc)
        th, pt = tracking_errors(log, sc.program)
        try:
            rate = decay_rate(log["t"], th)
        except EmptyWindow:
            rate = math.nan
        rel = abs(rate / sc.gains.a1 - 1.0)
        this = log.ok and rel <= 0.05 and abs(th[-1]) <= 1e-3 and abs(pt[-1]) <= 1e-3
        ok &= bool(this)
        parts.append(f"a1={sc.gains.a1:g}: rate {rate:.5f} ({rel:.1e} rel), final {abs(th[-1]):.1e}/{abs(pt[-1]):.1e}")
    return CriterionResult(4, "terminal attractor", ok, "; ".join(parts))


# --------------------------------------------------------------------------- 5

def check_invariant_manifold() -> CriterionResult:
    sc = load_scenario("baseline")
    log = cached_run(sc)
    th, pt = tracking_errors(log, sc.program)
    worst = float(max(np.max(np.abs(th)), np.max(np.abs(pt))))
    ok = log.ok and worst <= 1e-6
    return CriterionResult(5, "invariant manifold", ok, f"max(|theta_err|, |pitch_err|)={worst:.2e} over {log['t'][-1]:g} s")


# --------------------------------------------------------------------------- 6

def robustness_runs() -> tuple[Scenario, TrajectoryLog, TrajectoryLog]:
    sc = load_scenario("robustness")
    return sc, cached_run(sc, "simplified"), cached_run(sc)


def check_robustness() -> CriterionResult:
    sc, ref, full = robustness_runs()
    v = robustness_compare(ref, full, sc.robustness, sc.program, sc.t_final)
    fe = v.final_errors
    diffs = ", ".join(f"{k} {d:.3g}/{sc.robustness.limits[k]:g}" for k, d in v.sup_diff.items())
    detail = (
        f"verdict {v.label}; final errors simplified {fe['simplified'][0]:.3e}/{fe['simplified'][1]:.3e}, "
        f"full {fe['full'][0]:.3e}/{fe['full'][1]:.3e}; sup diffs {diffs}"
    )
    if v.reasons:
        detail += "; " + "; ".join(v.reasons)
    return CriterionResult(6, "robustness proxy", v.passed, detail)


# --------------------------------------------------------------------------- 7

def clf_monotone_report(sc: Scenario, log: TrajectoryLog) -> tuple[bool, str]:
    t0 = 5.0 * sc.gains.slowest_time_constant()
    n_up = clf_increases(log["t"], log["V"], t0)
    m = log["t"][:-1] >= t0
    rise = float(np.max(np.diff(log["V"])[m])) if m.any() else 0.0
    return log.ok and n_up == 0, f"{sc.name}: {n_up} increases after t={t0:.3g} s (max step rise {max(rise, 0.0):.2e})"


def check_clf_monotone_decay() -> CriterionResult:
    res = [clf_monotone_report(sc, cached_run(sc)) for sc in decay_scenarios()]
    ok = all(r[0] for r in res)
    return CriterionResult(7, "CLF monotone (terminal-attractor runs)", ok, "; ".join(r[1] for r in res))


def check_clf_monotone_robustness() -> CriterionResult:
    sc, ref, full = robustness_runs()
    r1 = clf_monotone_report(replace(sc, name="robustness/simplified"), ref)
    r2 = clf_monotone_report(replace(sc, name="robustness/full"), full)
    return CriterionResult(7, "CLF monotone (robustness runs)", r1[0] and r2[0], f"{r1[1]}; {r2[1]}")


# --------------------------------------------------------------------------- 8

def random_planar_system(rng: np.random.Generator) -> c2d.PlanarSystem:
    """Cubic drift maps, sinusoidal target, odd-cubic decreasing shaping."""
    c1 = rng.uniform(-1.0, 1.0, 4)
    c2 = rng.uniform(-1.0, 1.0, 4)
    A = rng.uniform(0.2, 2.0, 2)
    w = rng.uniform(0.2, 3.0, 2)
    ph = rng.uniform(0.0, 2 * math.pi, 2)
    off = rng.uniform(-1.0, 1.0, 2)
    a = rng.uniform(-2.0, -0.5, 2)
    b = rng.uniform(0.0, 0.5, 2)
    return c2d.PlanarSystem(
        f1=lambda x: float(np.polyval(c1, x)),
        f2=lambda x: float(np.polyval(c2, x)),
        chi1=lambda t: A[0] * math.sin(w[0] * t + ph[0]) + off[0],
        chi2=lambda t: A[1] * math.sin(w[1] * t + ph[1]) + off[1],
        dchi1=lambda t: A[0] * w[0] * math.cos(w[0] * t + ph[0]),
        dchi2=lambda t: A[1] * w[1] * math.cos(w[1] * t + ph[1]),
        g1=lambda y: a[0] * y - b[0] * y**3,
        g2=lambda y: a[1] * y - b[1] * y**3,
    )


def check_demo2d(n_random: int = 100, seed: int = 0) -> CriterionResult:
    sys_ = c2d.demo_system()
    x0 = np.array([2.0, -1.0])
    tr = c2d.simulate_2d(sys_, x0, 10.0, 1e-3)
    y0 = c2d.canonize(x0, 0.0, sys_)
    exact = np.column_stack([y0[0] * np.exp(-1.0 * tr.t), y0[1] * np.exp(-2.0 * tr.t)])
    err = float(np.max(np.abs(tr.y - exact)))
    on = c2d.simulate_2d(sys_, c2d.decanonize(np.zeros(2), 0.0, sys_), 10.0, 1e-3)
    stay = float(np.max(np.abs(on.y)))
    rng = np.random.default_rng(seed)
    worst_dv = -math.inf
    for _ in range(n_random):
        s = random_planar_system(rng)
        x0r = c2d.decanonize(rng.uniform(-1.0, 1.0, 2), 0.0, s)
        trr = c2d.simulate_2d(s, x0r, 5.0, 1e-2)
        worst_dv = max(worst_dv, float(np.max(trr.dV)))
    ok = err <= 1e-6 and stay <= 1e-9 and worst_dv <= 0.0
    return CriterionResult(
        8,
        "planar demo",
        ok,
        f"sup |y - y0*exp(a t)|={err:.2e}, on-curve max |y|={stay:.2e}, max dV/dt over {n_random} random systems={worst_dv:.2e}",
    )


# --------------------------------------------------------------------------- 9

def rk4_observed_order(dt: float = 0.1, T: float = 1.0) -> float:
    """Richardson estimate ``log2((y_h - y_h/2) / (y_h/2 - y_h/4))`` on dv/dt = -v."""
    rhs = lambda t, x: -x

    def solve(h: float) -> float:
        x = np.array([1.0])
        for i in range(int(round(T / h))):
            x = rk4_step(rhs, x, i * h, h)
        return float(x[0])

    y1, y2, y3 = solve(dt), solve(dt / 2), solve(dt / 4)
    return math.log2(abs(y1 - y2) / abs(y2 - y3))


def check_rk4_order() -> CriterionResult:
    order = rk4_observed_order()
    return CriterionResult(9, "integrator order", order >= 3.9, f"observed order {order:.4f}")


CHECKS = (
    check_atmosphere,
    check_manifold_solver,
    check_cascade_identity,
    check_terminal_attractor,
    check_invariant_manifold,
    check_robustness,
    check_clf_monotone_decay,
    check_clf_monotone_robustness,
    check_demo2d,
    check_rk4_order,
)


def run_all() -> list[CriterionResult]:
    return [c() for c in CHECKS]
