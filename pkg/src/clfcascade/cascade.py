"""Cascade control laws: pitch-rate command, nozzle-rate law and stabilizer law.

Every law here is evaluated on the design model: simplified aerodynamics and
the unperturbed model atmosphere, whatever plant is being simulated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from clfcascade.aero_env import AircraftParams, air_density, air_density_slope
from clfcascade.alpha_manifold import (
    EPS_SING,
    AlphaCommand,
    Gains,
    ManeuverProgram,
    solve_alpha_command,
)
from clfcascade.dynamics import ControlInput, State
from clfcascade.errors import DegeneratePressure, DomainError, NozzleLawSingular

PRESSURE_FLOOR = 1e-6  # N m, floor on 0.5*rho*v^2*S*l


class Saturation(enum.IntFlag):
    NONE = 0
    DELTA_M = 1
    DELTA_P = 2
    THRUST = 4


@dataclass(frozen=True)
class DesignTerms:
    """Design-model right-hand sides at one state."""

    rho: float
    A1: float  # dv/dt
    A2: float  # A2', dtheta/dt
    alpha_rate: float  # q - A2'


@dataclass(frozen=True)
class ControlComputation:
    phi_cmd: AlphaCommand
    design: DesignTerms
    W0: float
    dphi_dt: float
    q_cmd: float
    delta_p_rate: float
    delta_m: float
    phi_ddot: float
    design_rate_dot: float
    eq9_residual: float
    stage4_residual: float


def design_terms(s: State, delta_p: float, P: float, p: AircraftParams) -> DesignTerms:
    if not s.v > 0:
        raise DomainError(f"airspeed must be positive, got {s.v!r}")
    rho = air_density(s.h)
    v = s.v
    cy = p.CYa * math.sin(2.0 * s.alpha)
    cx = p.CX0 + p.k * cy * cy
    a1 = P / p.m * math.cos(s.alpha + delta_p) - 0.5 * rho * v * v * p.S * cx / p.m - p.g * math.sin(s.theta)
    a2 = P / (p.m * v) * math.sin(s.alpha + delta_p) + 0.5 * rho * v * p.S * cy / p.m - p.g / v * math.cos(s.theta)
    return DesignTerms(rho, a1, a2, s.q - a2)


def q_command(
    s: State,
    phi: float,
    dphi_dt: float,
    a2: float,
    design_rate: float,
) -> float:
    """Pitch rate that makes the alpha error decay at rate ``a2``.

    ``design_rate`` is A2' evaluated at the current state.
    """
    return a2 * (s.alpha - phi) + design_rate + dphi_dt


def nozzle_W0(cmd: AlphaCommand, s: State, design: DesignTerms) -> float:
    """Part of dphi/dt that does not depend on the nozzle rate."""
    d = cmd.partials
    return d.dt + d.dv * design.A1 + d.dh * s.v * math.sin(s.theta) + d.dtheta * design.A2


def delta_p_rate(
    s: State,
    cmd: AlphaCommand,
    prog: ManeuverProgram,
    gains: Gains,
    design: DesignTerms,
    W0: float,
    eps_sing: float = EPS_SING,
) -> float:
    """Nozzle deflection rate that places the pitch rate command on ``a4 * pitch_error``."""
    dpd = cmd.partials.ddelta_p
    if abs(dpd) < eps_sing:
        raise NozzleLawSingular(f"|dphi/ddelta_p| = {abs(dpd):.3e} < {eps_sing:g}")
    bracket = gains.a4 * (s.pitch - prog.pitch_target) - gains.a2 * (s.alpha - cmd.phi) - design.A2 - W0
    return bracket / dpd


def dphi_dt_total(cmd: AlphaCommand, W0: float, delta_p_rate: float) -> float:
    return W0 + cmd.partials.ddelta_p * delta_p_rate


def delta_m_command(
    s: State,
    cmd: AlphaCommand,
    dphi_dt: float,
    phi_ddot: float,
    design_rate_dot: float,
    gains: Gains,
    p: AircraftParams,
    u: ControlInput,
    design: DesignTerms,
    pressure_floor: float = PRESSURE_FLOOR,
) -> float:
    """Stabilizer deflection making the pitch-rate error decay at rate ``a3``.

    ``u`` supplies the current nozzle deflection and thrust; its ``delta_m``
    is ignored.
    """
    Q = 0.5 * design.rho * s.v**2 * p.S * p.l
    if Q < pressure_floor:
        raise DegeneratePressure(f"0.5*rho*v^2*S*l = {Q:.3e} below floor {pressure_floor:g}")
    a2, a3 = gains.a2, gains.a3
    alpha_err = s.alpha - cmd.phi
    W2 = a3 * (s.q - a2 * alpha_err - design.A2 - dphi_dt)
    W3 = a2 * (design.alpha_rate - dphi_dt) + design_rate_dot + phi_ddot
    W4 = p.Cma * math.sin(2.0 * s.alpha) + p.Cmq * (p.l / s.v) * s.q
    thrust_moment = u.P * (p.yp + p.xp * math.sin(u.delta_p))
    return ((p.Izz * (W2 + W3) - thrust_moment) / Q - W4) / p.Cmdm


def stage4_residual(
    s: State,
    cmd: AlphaCommand,
    dphi_dt: float,
    phi_ddot: float,
    design_rate_dot: float,
    gains: Gains,
    p: AircraftParams,
    u: ControlInput,
    design: DesignTerms,
) -> float:
    """Pitch-rate-error equation residual: design-model dq/dt minus its required value."""
    a2, a3 = gains.a2, gains.a3
    Q = 0.5 * design.rho * s.v**2 * p.S * p.l
    cm = p.Cma * math.sin(2.0 * s.alpha) + p.Cmdm * u.delta_m + p.Cmq * (p.l / s.v) * s.q
    qdot = (Q * cm + u.P * (p.yp + p.xp * math.sin(u.delta_p))) / p.Izz
    lhs = qdot - a2 * (design.alpha_rate - dphi_dt) - design_rate_dot - phi_ddot
    rhs = a3 * (s.q - a2 * (s.alpha - cmd.phi) - design.A2 - dphi_dt)
    return lhs - rhs


def second_derivative_estimates(history: Sequence[tuple[float, float]], dt: float) -> tuple[float, float]:
    """Backward differences of the ``(dphi/dt, A2')`` samples.

    Returns ``(d2phi/dt2, dA2'/dt)`` from the last two samples, or zeros when
    fewer than two are available.
    """
    if len(history) < 2:
        return 0.0, 0.0
    (f0, r0), (f1, r1) = history[-2], history[-1]
    return (f1 - f0) / dt, (r1 - r0) / dt


def analytic_second_derivatives(
    s: State,
    cmd: AlphaCommand,
    prog: ManeuverProgram,
    gains: Gains,
    p: AircraftParams,
    P: float,
    delta_p: float,
    design: DesignTerms,
    dphi_dt: float,
    delta_p_rate: float,
) -> tuple[float, float]:
    """Exact ``(d2phi/dt2, dA2'/dt)`` along the design model under the nozzle law.

    With the nozzle law in force ``dphi/dt = a4*pitch_err - a2*alpha_err - A2'``
    identically, so its derivative needs only the chain rule on A2'.
    Thrust is treated as constant.
    """
    v, th, al = s.v, s.theta, s.alpha
    rho = design.rho
    thrust = P / (p.m * v)
    sap = math.sin(al + delta_p)
    cap = math.cos(al + delta_p)
    lift = rho * v * p.S * p.CYa / p.m
    d_alpha = thrust * cap + lift * math.cos(2.0 * al)
    d_v = -thrust / v * sap + 0.5 * rho * p.S * p.CYa * math.sin(2.0 * al) / p.m + p.g / v**2 * math.cos(th)
    d_theta = p.g / v * math.sin(th)
    d_h = 0.5 * air_density_slope(s.h) * v * p.S * p.CYa * math.sin(2.0 * al) / p.m
    d_dp = thrust * cap
    rate_dot = (
        d_alpha * design.alpha_rate
        + d_v * design.A1
        + d_theta * design.A2
        + d_h * v * math.sin(th)
        + d_dp * delta_p_rate
    )
    phi_ddot = gains.a4 * s.q - gains.a2 * (design.alpha_rate - dphi_dt) - rate_dot
    return phi_ddot, rate_dot


def compute_control(
    t: float,
    s: State,
    delta_p: float,
    P: float,
    prog: ManeuverProgram,
    gains: Gains,
    p: AircraftParams,
    warm_start: float | None,
    estimator: Callable[[float, float], tuple[float, float]] | None = None,
) -> ControlComputation:
    """Evaluate the full cascade at one state.

    ``estimator`` receives ``(dphi/dt, A2')`` and returns the
    ``(d2phi/dt2, dA2'/dt)`` used by the stabilizer law. Without one both are
    computed analytically.
    """
    cmd = solve_alpha_command(t, s, delta_p, P, prog, gains.a1, p, warm_start)
    design = design_terms(s, delta_p, P, p)
    W0 = nozzle_W0(cmd, s, design)
    dp_rate = delta_p_rate(s, cmd, prog, gains, design, W0)
    dphi = dphi_dt_total(cmd, W0, dp_rate)
    qc = q_command(s, cmd.phi, dphi, gains.a2, design.A2)
    if estimator is None:
        phi_ddot, design_rate_dot = analytic_second_derivatives(
            s, cmd, prog, gains, p, P, delta_p, design, dphi, dp_rate
        )
    else:
        phi_ddot, design_rate_dot = estimator(dphi, design.A2)
    u = ControlInput(0.0, delta_p, P)
    dm = delta_m_command(s, cmd, dphi, phi_ddot, design_rate_dot, gains, p, u, design)
    eq9 = gains.a4 * (s.pitch - prog.pitch_target) - qc
    r4 = stage4_residual(s, cmd, dphi, phi_ddot, design_rate_dot, gains, p, ControlInput(dm, delta_p, P), design)
    return ControlComputation(
        phi_cmd=cmd,
        design=design,
        W0=W0,
        dphi_dt=dphi,
        q_cmd=qc,
        delta_p_rate=dp_rate,
        delta_m=dm,
        phi_ddot=phi_ddot,
        design_rate_dot=design_rate_dot,
        eq9_residual=eq9,
        stage4_residual=r4,
    )


def saturate(u: ControlInput, p: AircraftParams) -> tuple[ControlInput, Saturation]:
    """Clamp each channel to its bounds and flag the clipped ones."""
    flags = Saturation.NONE
    dm = u.delta_m
    if abs(dm) > p.dm_max:
        dm = math.copysign(p.dm_max, dm)
        flags |= Saturation.DELTA_M
    dp = u.delta_p
    if abs(dp) > p.dp_max:
        dp = math.copysign(p.dp_max, dp)
        flags |= Saturation.DELTA_P
    P = u.P
    if P < p.P_min or P > p.P_max:
        P = min(max(P, p.P_min), p.P_max)
        flags |= Saturation.THRUST
    return ControlInput(dm, dp, P), flags
