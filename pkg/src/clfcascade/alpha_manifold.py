"""Angle-of-attack command solving the first-stage tracking equation.

The command ``phi`` is the angle of attack at which the design-model
flight-path rate equals the program rate plus ``a1`` times the tracking
error::

    G(alpha) = A2'(alpha) - theta_m*omega*cos(omega*t)
               - a1*(theta - theta_m*(1 + sin(omega*t))) = 0

``G`` is periodic in ``alpha`` so several roots can exist; the solver returns
the one nearest a caller-supplied warm start. Partial derivatives of ``phi``
follow from the implicit function theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from clfcascade.aero_env import AircraftParams, air_density, air_density_slope
from clfcascade.dynamics import State
from clfcascade.errors import AmbiguousRoot, DomainError, ManifoldSingular, NoRootInBracket

BRACKET = (-math.pi / 6.0, math.pi / 6.0)
RESIDUAL_TOL = 1e-10
EPS_SING = 1e-8
MAX_ITER = 100
SCAN_STEP = 1e-3


@dataclass(frozen=True)
class ManeuverProgram:
    """Flight-path program ``theta_m*(1 + sin(omega*t))`` and a constant pitch target."""

    theta_m: float
    omega: float
    pitch_target: float

    def __post_init__(self) -> None:
        if self.omega < 0:
            raise ValueError("program frequency omega must be >= 0")

    def theta(self, t: float) -> float:
        return self.theta_m * (1.0 + math.sin(self.omega * t))

    def theta_rate(self, t: float) -> float:
        return self.theta_m * self.omega * math.cos(self.omega * t)

    def theta_accel(self, t: float) -> float:
        return -self.theta_m * self.omega**2 * math.sin(self.omega * t)


@dataclass(frozen=True)
class Gains:
    """Shaping coefficients of the four cascade stages (all negative, 1/s)."""

    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self) -> None:
        for name in ("a1", "a2", "a3", "a4"):
            if not getattr(self, name) < 0:
                raise ValueError(f"gain must be negative: {name}={getattr(self, name)!r}")

    def slowest_time_constant(self) -> float:
        return max(abs(1.0 / a) for a in (self.a1, self.a2, self.a3, self.a4))


class PhiPartials(NamedTuple):
    dt: float
    dv: float
    dh: float
    dtheta: float
    ddelta_p: float


@dataclass(frozen=True)
class AlphaCommand:
    phi: float
    residual: float
    partials: PhiPartials
    iterations: int = 0


class _GTerms(NamedTuple):
    G: float
    dalpha: float
    design_rate: float  # A2' at alpha


def _terms(
    t: float,
    alpha: float,
    v: float,
    theta: float,
    h: float,
    delta_p: float,
    P: float,
    prog: ManeuverProgram,
    a1: float,
    p: AircraftParams,
    rho: float,
) -> _GTerms:
    thrust = P / (p.m * v)
    lift = rho * v * p.S * p.CYa / p.m
    a2d = thrust * math.sin(alpha + delta_p) + 0.5 * lift * math.sin(2.0 * alpha) - p.g / v * math.cos(theta)
    wt = prog.omega * t
    G = a2d - prog.theta_m * prog.omega * math.cos(wt) - a1 * (theta - prog.theta_m * (1.0 + math.sin(wt)))
    dG = thrust * math.cos(alpha + delta_p) + lift * math.cos(2.0 * alpha)
    return _GTerms(G, dG, a2d)


def _check(v: float) -> None:
    if not v > 0:
        raise DomainError(f"airspeed must be positive, got {v!r}")


def residual_G(
    t: float,
    alpha: float,
    s: State,
    delta_p: float,
    P: float,
    prog: ManeuverProgram,
    a1: float,
    p: AircraftParams,
) -> float:
    """Left-hand side of the alpha-command equation at ``alpha``.

    Only ``v``, ``theta`` and ``h`` are read from ``s``.
    """
    _check(s.v)
    return _terms(t, alpha, s.v, s.theta, s.h, delta_p, P, prog, a1, p, air_density(s.h)).G


def phi_partials(
    t: float,
    s: State,
    delta_p: float,
    P: float,
    prog: ManeuverProgram,
    a1: float,
    p: AircraftParams,
    phi: float,
    eps_sing: float = EPS_SING,
) -> PhiPartials:
    """Implicit-function partials of the alpha command with respect to
    ``t, v, h, theta, delta_p``.
    """
    _check(s.v)
    v, theta, h = s.v, s.theta, s.h
    rho = air_density(h)
    sa = math.sin(phi + delta_p)
    ca = math.cos(phi + delta_p)
    s2a = math.sin(2.0 * phi)
    thrust = P / (p.m * v)
    dG_da = thrust * ca + rho * v * p.S * p.CYa * math.cos(2.0 * phi) / p.m
    if abs(dG_da) < eps_sing:
        raise ManifoldSingular(f"|dG/dalpha| = {abs(dG_da):.3e} < {eps_sing:g} at alpha={phi:.6f}")
    wt = prog.omega * t
    dG_dt = prog.theta_m * prog.omega**2 * math.sin(wt) + a1 * prog.theta_m * prog.omega * math.cos(wt)
    dG_dv = -thrust / v * sa + 0.5 * rho * p.S * p.CYa * s2a / p.m + p.g / v**2 * math.cos(theta)
    dG_dh = 0.5 * air_density_slope(h) * v * p.S * p.CYa * s2a / p.m
    dG_dtheta = p.g / v * math.sin(theta) - a1
    dG_ddp = thrust * ca
    inv = -1.0 / dG_da
    return PhiPartials(dG_dt * inv, dG_dv * inv, dG_dh * inv, dG_dtheta * inv, dG_ddp * inv)


def _refine(f, lo: float, hi: float, flo: float, tol: float) -> tuple[float, int]:
    """Safeguarded Newton on a sign-changing interval ``[lo, hi]``.

    ``f`` returns ``(G, dG)``. Newton steps leaving the interval, or failing to
    halve it, are replaced by bisection.
    """
    x = 0.5 * (lo + hi)
    for it in range(1, MAX_ITER + 1):
        g, dg = f(x)
        if abs(g) <= tol:
            return x, it
        if (g < 0) == (flo < 0):
            lo, flo = x, g
        else:
            hi = x
        step_ok = dg != 0
        if step_ok:
            xn = x - g / dg
            step_ok = lo < xn < hi
        x = xn if step_ok else 0.5 * (lo + hi)
        if hi - lo < 1e-15:
            break
    g, _ = f(x)
    return x, MAX_ITER


def solve_alpha_command(
    t: float,
    s: State,
    delta_p: float,
    P: float,
    prog: ManeuverProgram,
    a1: float,
    p: AircraftParams,
    warm_start: float | None = None,
    bracket: tuple[float, float] = BRACKET,
    eps_sing: float = EPS_SING,
) -> AlphaCommand:
    """Solve for the angle-of-attack command nearest ``warm_start`` (0 if omitted).

    Raises :class:`NoRootInBracket` if no root is found, :class:`AmbiguousRoot`
    if the two nearest roots are equidistant, :class:`ManifoldSingular` if the
    implicit partials are undefined at the root.
    """
    _check(s.v)
    v, theta, h = s.v, s.theta, s.h
    rho = air_density(h)
    lo_b, hi_b = bracket
    w = 0.0 if warm_start is None else min(max(warm_start, lo_b), hi_b)
    tight = 1e-2 * RESIDUAL_TOL

    def f(alpha: float) -> tuple[float, float]:
        tr = _terms(t, alpha, v, theta, h, delta_p, P, prog, a1, p, rho)
        return tr.G, tr.dalpha

    # Fast path: plain Newton from the warm start, accepted only if it stays
    # within one scan cell, so no closer root can have been skipped.
    x = w
    root = None
    g_root = math.inf
    iters = 0
    for iters in range(1, MAX_ITER + 1):
        g, dg = f(x)
        if abs(g) <= tight:
            root, g_root = x, g
            break
        if dg == 0:
            break
        step = -g / dg
        if abs(step) > 0.1:
            step = math.copysign(0.1, step)
        x = x + step
        if not lo_b <= x <= hi_b:
            break
    else:
        g, _ = f(x)
        if abs(g) <= RESIDUAL_TOL:
            root, g_root = x, g

    if root is not None and abs(root - w) <= SCAN_STEP:
        return _finish(t, s, delta_p, P, prog, a1, p, root, g_root, iters, eps_sing)

    found = _scan_nearest(f, w, lo_b, hi_b, tight)
    if found is None:
        if root is not None:
            # tangential root: no sign change to scan for
            return _finish(t, s, delta_p, P, prog, a1, p, root, g_root, iters, eps_sing)
        raise NoRootInBracket(
            f"no root of the alpha-command equation in [{lo_b:.4f}, {hi_b:.4f}] "
            f"(t={t:.4f}, v={v:.3f}, theta={theta:.5f}, h={h:.1f}, delta_p={delta_p:.5f}, P={P:.1f})"
        )
    phi, n = found
    return _finish(t, s, delta_p, P, prog, a1, p, phi, f(phi)[0], iters + n, eps_sing)


def _scan_nearest(f, w: float, lo_b: float, hi_b: float, tol: float) -> tuple[float, int] | None:
    """Walk outward from ``w`` in steps of ``SCAN_STEP`` until a sign change is met."""
    gw, _ = f(w)
    if abs(gw) <= tol:
        return w, 0
    left_x, left_g = w, gw
    right_x, right_g = w, gw
    while left_x > lo_b or right_x < hi_b:
        hits = []
        if right_x < hi_b:
            nx = min(right_x + SCAN_STEP, hi_b)
            ng, _ = f(nx)
            if ng == 0 or (ng < 0) != (right_g < 0):
                hits.append((right_x, nx, right_g))
            right_x, right_g = nx, ng
        if left_x > lo_b:
            nx = max(left_x - SCAN_STEP, lo_b)
            ng, _ = f(nx)
            if ng == 0 or (ng < 0) != (left_g < 0):
                hits.append((nx, left_x, ng))
            left_x, left_g = nx, ng
        if not hits:
            continue
        roots = [_refine(f, a, b, fa, tol) for a, b, fa in hits]
        if len(roots) == 2:
            d0 = abs(roots[0][0] - w)
            d1 = abs(roots[1][0] - w)
            if abs(d0 - d1) <= RESIDUAL_TOL:
                raise AmbiguousRoot(
                    f"roots {roots[0][0]:.10f} and {roots[1][0]:.10f} equidistant from warm start {w:.10f}"
                )
            return roots[0] if d0 < d1 else roots[1]
        return roots[0]
    return None


def _finish(t, s, delta_p, P, prog, a1, p, phi, g, iters, eps_sing) -> AlphaCommand:
    if abs(g) > RESIDUAL_TOL:
        raise NoRootInBracket(f"solver stalled with |G| = {abs(g):.3e} at alpha={phi:.8f}")
    partials = phi_partials(t, s, delta_p, P, prog, a1, p, phi, eps_sing)
    return AlphaCommand(phi=phi, residual=abs(g), partials=partials, iterations=iters)
