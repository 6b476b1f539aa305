"""Fixed-step RK4 simulation of the plant under the cascade control laws.

The integrated state is the plant state extended with the nozzle deflection,
``(v, theta, alpha, q, h, delta_p)``; the nozzle law supplies its rate.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from clfcascade.aero_env import AircraftParams
from clfcascade.alpha_manifold import Gains, ManeuverProgram, residual_G
from clfcascade.cascade import (
    ControlComputation,
    Saturation,
    compute_control,
    second_derivative_estimates,
)
from clfcascade.dynamics import State, plant_rates
from clfcascade.errors import ControlLawError, DomainError

log = logging.getLogger(__name__)

STATE_NAMES = ("v", "theta", "alpha", "q", "h", "delta_p")


@dataclass(frozen=True)
class ExtendedState:
    v: float
    theta: float
    alpha: float
    q: float
    h: float
    delta_p: float

    @property
    def state(self) -> State:
        return State(self.v, self.theta, self.alpha, self.q, self.h)

    @property
    def pitch(self) -> float:
        return self.alpha + self.theta

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.theta, self.alpha, self.q, self.h, self.delta_p])

    @classmethod
    def from_array(cls, x) -> "ExtendedState":
        return cls(*(float(c) for c in x))


@dataclass(frozen=True)
class ThrustSchedule:
    """Piecewise-constant, right-continuous thrust: ``P(t) = P_k`` for ``t_k <= t < t_{k+1}``."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.breakpoints:
            raise ValueError("thrust schedule needs at least one breakpoint")
        times = [b[0] for b in self.breakpoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("thrust breakpoints must be strictly increasing")
        object.__setattr__(self, "_times", times)

    @classmethod
    def constant(cls, P: float) -> "ThrustSchedule":
        return cls(((0.0, float(P)),))

    def __call__(self, t: float) -> float:
        i = bisect.bisect_right(self._times, t) - 1
        return self.breakpoints[max(i, 0)][1]

    def check_bounds(self, p: AircraftParams) -> None:
        for tb, P in self.breakpoints:
            if not p.P_min <= P <= p.P_max:
                raise ValueError(f"thrust {P} at t={tb} outside [{p.P_min}, {p.P_max}]")


LOG_COLUMNS = (
    "t",
    "v",
    "theta",
    "alpha",
    "q",
    "h",
    "delta_p",
    "delta_m",
    "P",
    "phi",
    "q_cmd",
    "residual_G",
    "V",
    "sat_flags",
    # diagnostics kept in memory only
    "delta_p_rate",
    "dphi_dt",
    "eq9_residual",
    "stage4_residual",
    "theta_err",
    "pitch_err",
)


@dataclass
class TrajectoryLog:
    """Per-step record of a closed-loop run. Column arrays are keyed by :data:`LOG_COLUMNS`."""

    data: dict[str, np.ndarray]
    dt: float
    failure: str | None = None
    failure_time: float | None = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    def __len__(self) -> int:
        return len(self.data["t"])

    @property
    def ok(self) -> bool:
        return self.failure is None

    @classmethod
    def from_rows(cls, rows: list[tuple], dt: float, **kw) -> "TrajectoryLog":
        if rows:
            arr = np.array(rows, dtype=float)
            data = {name: arr[:, i].copy() for i, name in enumerate(LOG_COLUMNS)}
        else:
            data = {name: np.zeros(0) for name in LOG_COLUMNS}
        data["sat_flags"] = data["sat_flags"].astype(np.int64)
        return cls(data, dt, **kw)


def rk4_step(rhs: Callable[[float, np.ndarray], np.ndarray], x: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = rhs(t + dt, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def clf_value(theta: float, pitch: float, t: float, prog: ManeuverProgram) -> float:
    """Sum of squared flight-path and pitch-attitude tracking errors."""
    eth = theta - prog.theta(t)
    ept = pitch - prog.pitch_target
    return eth * eth + ept * ept


def on_manifold_state(
    p: AircraftParams,
    prog: ManeuverProgram,
    gains: Gains,
    P: float,
    v: float,
    h: float,
    theta_err: float = 0.0,
    pitch_err: float = 0.0,
    t0: float = 0.0,
) -> ExtendedState:
    """Initial state on both intermediate manifolds with given tracking errors.

    Flight path and attitude are set from the program plus the errors, which
    fixes alpha; the nozzle angle is then chosen so that alpha solves the
    alpha-command equation, and q is placed on its command ``a4 * pitch_err``.
    """
    theta = prog.theta(t0) + theta_err
    alpha = prog.pitch_target + pitch_err - theta
    s = State(v, theta, alpha, 0.0, h)
    # G is affine in sin(alpha + delta_p) with slope P/(m v)
    g0 = residual_G(t0, alpha, s, -alpha, P, prog, gains.a1, p)  # sin(0) = 0 term
    ratio = -g0 * p.m * v / P
    if abs(ratio) > 1.0:
        raise ValueError(f"no nozzle angle puts alpha={alpha:.5f} on the alpha manifold (sin ratio {ratio:.3f})")
    delta_p = math.asin(ratio) - alpha
    if abs(delta_p) > p.dp_max:
        raise ValueError(f"required nozzle angle {delta_p:.4f} exceeds bound {p.dp_max}")
    return ExtendedState(v, theta, alpha, gains.a4 * pitch_err, h, delta_p)


def simulate(
    p: AircraftParams,
    prog: ManeuverProgram,
    gains: Gains,
    thrust: ThrustSchedule,
    x0: ExtendedState,
    dt: float = 1e-3,
    t_final: float = 30.0,
    plant: str = "simplified",
    density_scale: float = 1.0,
    derivatives: str = "backward",
) -> TrajectoryLog:
    """Integrate the closed loop and log every step.

    The plant uses ``plant`` aerodynamics ("simplified" or "full") and the
    model atmosphere scaled by ``density_scale``; the control laws always use
    the design model. ``derivatives`` selects how the second-order terms of
    the stabilizer law are obtained: "backward" (differences of logged first
    derivatives, held over each step) or "analytic".

    A control-law or domain failure stops the run; the log up to that point
    is returned with ``failure`` set.
    """
    if plant not in ("simplified", "full"):
        raise ValueError(f"plant must be 'simplified' or 'full', got {plant!r}")
    if derivatives not in ("backward", "analytic"):
        raise ValueError(f"derivatives must be 'backward' or 'analytic', got {derivatives!r}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    simplified = plant == "simplified"
    n_steps = int(round(t_final / dt))
    history: list[tuple[float, float]] = []
    rows: list[tuple] = []
    x = x0.as_array()
    warm = x0.alpha
    failure = None
    failure_time = None

    def control_at(t: float, xv: np.ndarray, P: float, est) -> ControlComputation:
        s = State(xv[0], xv[1], xv[2], xv[3], xv[4])
        return compute_control(t, s, xv[5], P, prog, gains, p, warm, est)

    def rates(t: float, xv: np.ndarray, P: float, cc: ControlComputation) -> tuple[np.ndarray, Saturation]:
        flags = Saturation.NONE
        dm = cc.delta_m
        if abs(dm) > p.dm_max:
            dm = math.copysign(p.dm_max, dm)
            flags |= Saturation.DELTA_M
        dp_rate = cc.delta_p_rate
        if abs(xv[5]) >= p.dp_max and dp_rate * xv[5] > 0:
            dp_rate = 0.0
            flags |= Saturation.DELTA_P
        d = plant_rates(xv[0], xv[1], xv[2], xv[3], xv[4], dm, xv[5], P, p, simplified, density_scale)
        return np.array((*d, dp_rate)), flags

    backward = derivatives == "backward"
    held = (0.0, 0.0)

    def record(dphi: float, rate: float) -> tuple[float, float]:
        nonlocal held
        history.append((dphi, rate))
        if len(history) > 2:
            history.pop(0)
        held = second_derivative_estimates(history, dt)
        return held

    for n in range(n_steps + 1):
        t = n * dt
        P = thrust(t + 0.5 * dt)
        p_flag = Saturation.NONE
        if P < p.P_min or P > p.P_max:
            P = min(max(P, p.P_min), p.P_max)
            p_flag = Saturation.THRUST
        try:
            cc = control_at(t, x, P, record if backward else None)
            warm = cc.phi_cmd.phi
            k1, flags = rates(t, x, P, cc)
        except (ControlLawError, DomainError) as exc:
            failure, failure_time = f"{type(exc).__name__}: {exc}", t
            log.warning("simulation stopped at t=%.4f: %s", t, failure)
            break
        flags |= p_flag
        pitch = x[2] + x[1]
        theta_err = x[1] - prog.theta(t)
        pitch_err = pitch - prog.pitch_target
        rows.append(
            (
                t, x[0], x[1], x[2], x[3], x[4], x[5],
                min(max(cc.delta_m, -p.dm_max), p.dm_max), P, cc.phi_cmd.phi, cc.q_cmd,
                cc.phi_cmd.residual, clf_value(x[1], pitch, t, prog), int(flags),
                cc.delta_p_rate, cc.dphi_dt, cc.eq9_residual, cc.stage4_residual,
                theta_err, pitch_err,
            )
        )
        if n == n_steps:
            break

        held_est = (lambda _f, _r, _h=held: _h) if backward else None

        def rhs(tt: float, xv: np.ndarray) -> np.ndarray:
            return rates(tt, xv, P, control_at(tt, xv, P, held_est))[0]

        try:
            k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1)
            k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2)
            k4 = rhs(t + dt, x + dt * k3)
        except (ControlLawError, DomainError) as exc:
            failure, failure_time = f"{type(exc).__name__}: {exc}", t
            log.warning("simulation stopped at t=%.4f: %s", t, failure)
            break
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if abs(x[5]) > p.dp_max:
            x[5] = math.copysign(p.dp_max, x[5])
        if not x[0] > 0:
            failure, failure_time = f"DomainError: airspeed became non-positive ({x[0]:.4g})", t + dt
            break

    return TrajectoryLog.from_rows(rows, dt, failure=failure, failure_time=failure_time)
