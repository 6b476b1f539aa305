"""Five-state longitudinal model of a thrust-vectoring aircraft.

State ``(v, theta, alpha, q, h)``; pitch attitude is derived as
``alpha + theta``. ``A1`` is the speed rate, ``A2`` the flight-path-angle
rate; with ``simplified=True`` the latter is the control-design variant that
ignores stabilizer lift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import fsolve

from clfcascade.aero_env import AircraftParams, aero_coefficients, air_density
from clfcascade.errors import DomainError


@dataclass(frozen=True)
class State:
    v: float
    theta: float
    alpha: float
    q: float
    h: float

    @property
    def pitch(self) -> float:
        return self.alpha + self.theta

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.theta, self.alpha, self.q, self.h])


@dataclass(frozen=True)
class ControlInput:
    delta_m: float
    delta_p: float
    P: float


def _check_speed(v: float) -> None:
    if not v > 0:
        raise DomainError(f"airspeed must be positive, got {v!r}")


def A1(
    s: State,
    u: ControlInput,
    p: AircraftParams,
    simplified: bool = False,
    density_scale: float = 1.0,
) -> float:
    """dv/dt, m/s^2."""
    _check_speed(s.v)
    rho = density_scale * air_density(s.h)
    _, cx, _ = aero_coefficients(s.alpha, s.q, s.v, u.delta_m, p, simplified)
    return (
        u.P / p.m * math.cos(s.alpha + u.delta_p)
        - 0.5 * rho * s.v**2 * p.S * cx / p.m
        - p.g * math.sin(s.theta)
    )


def A2(
    s: State,
    u: ControlInput,
    p: AircraftParams,
    simplified: bool = False,
    density_scale: float = 1.0,
) -> float:
    """dtheta/dt, rad/s."""
    _check_speed(s.v)
    rho = density_scale * air_density(s.h)
    cy, _, _ = aero_coefficients(s.alpha, s.q, s.v, u.delta_m, p, simplified)
    return (
        u.P / (p.m * s.v) * math.sin(s.alpha + u.delta_p)
        + 0.5 * rho * s.v * p.S * cy / p.m
        - p.g / s.v * math.cos(s.theta)
    )


def pitch_acceleration(
    s: State,
    u: ControlInput,
    p: AircraftParams,
    density_scale: float = 1.0,
) -> float:
    """dq/dt, rad/s^2 (identical in both aerodynamic modes)."""
    _check_speed(s.v)
    rho = density_scale * air_density(s.h)
    _, _, cm = aero_coefficients(s.alpha, s.q, s.v, u.delta_m, p, True)
    moment = 0.5 * rho * s.v**2 * p.S * p.l * cm + u.P * (p.yp + p.xp * math.sin(u.delta_p))
    return moment / p.Izz


def state_derivatives(
    s: State,
    u: ControlInput,
    p: AircraftParams,
    simplified: bool = False,
    density_scale: float = 1.0,
) -> np.ndarray:
    """Rates ``(dv, dtheta, dalpha, dq, dh)`` of the plant."""
    return np.array(plant_rates(s.v, s.theta, s.alpha, s.q, s.h, u.delta_m, u.delta_p, u.P, p, simplified, density_scale))


def plant_rates(
    v: float,
    theta: float,
    alpha: float,
    q: float,
    h: float,
    delta_m: float,
    delta_p: float,
    P: float,
    p: AircraftParams,
    simplified: bool,
    density_scale: float,
) -> tuple[float, float, float, float, float]:
    """Scalar form of :func:`state_derivatives` for the integration loop."""
    _check_speed(v)
    rho = density_scale * air_density(h)
    cy, cx, cm = aero_coefficients(alpha, q, v, delta_m, p, simplified)
    qs = 0.5 * rho * v * p.S
    dv = P / p.m * math.cos(alpha + delta_p) - qs * v * cx / p.m - p.g * math.sin(theta)
    dtheta = P / (p.m * v) * math.sin(alpha + delta_p) + qs * cy / p.m - p.g / v * math.cos(theta)
    dq = (qs * v * p.l * cm + P * (p.yp + p.xp * math.sin(delta_p))) / p.Izz
    return dv, dtheta, q - dtheta, dq, v * math.sin(theta)


def trim(
    p: AircraftParams,
    v: float,
    h: float,
    theta: float,
    delta_p: float = 0.0,
    alpha_guess: float = 0.1,
    P_guess: float | None = None,
    density_scale: float = 1.0,
) -> tuple[float, float]:
    """Angle of attack and thrust for steady straight flight of the design model.

    Solves ``A1 = 0`` and ``A2 = 0`` (simplified aerodynamics) for
    ``(alpha, P)`` at the given speed, altitude, flight path angle and nozzle
    deflection, in the model atmosphere scaled by ``density_scale``.
    Returns ``(alpha, P)``.
    """
    _check_speed(v)
    u0 = ControlInput(0.0, delta_p, 0.0)

    def residual(x: np.ndarray) -> list[float]:
        alpha, P = x
        s = State(v, theta, alpha, 0.0, h)
        u = ControlInput(u0.delta_m, delta_p, P)
        return [A1(s, u, p, True, density_scale), A2(s, u, p, True, density_scale)]

    if P_guess is None:
        P_guess = 0.2 * p.m * p.g
    sol, info, ier, msg = fsolve(residual, [alpha_guess, P_guess], full_output=True, xtol=1e-13)
    if ier != 1:
        raise RuntimeError(f"trim did not converge: {msg}")
    return float(sol[0]), float(sol[1])
