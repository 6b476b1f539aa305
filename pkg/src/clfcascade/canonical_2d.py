"""Curve tracking for a planar cross-coupled system via a translating change of coordinates.

The plant is::

    dx1/dt = f1(x2) + u1
    dx2/dt = f2(x1) + u2

and the goal is to follow the curve ``(chi1(t), chi2(t))``. In coordinates
``y = x - chi(t)`` the tracked curve becomes the origin, and the feedback

    u_i = g_i(y_i) + dchi_i/dt - f_i(x_other)

turns the closed loop into the decoupled ``dy_i/dt = g_i(y_i)``. With every
``g_i`` vanishing at zero and strictly decreasing, ``V = y1^2 + y2^2``
decreases along every trajectory off the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from clfcascade.closed_loop import rk4_step

Scalar = Callable[[float], float]

_GRID = np.linspace(-5.0, 5.0, 201)


@dataclass(frozen=True)
class PlanarSystem:
    """Drift maps, target curve with its time derivatives, and shaping maps."""

    f1: Scalar  # function of x2
    f2: Scalar  # function of x1
    chi1: Scalar
    chi2: Scalar
    dchi1: Scalar
    dchi2: Scalar
    g1: Scalar
    g2: Scalar
    check_grid: np.ndarray = field(default_factory=lambda: _GRID, repr=False, compare=False)

    def __post_init__(self) -> None:
        for name in ("g1", "g2"):
            g = getattr(self, name)
            if abs(g(0.0)) > 1e-12:
                raise ValueError(f"{name}(0) must be 0, got {g(0.0)!r}")
            vals = np.array([g(float(y)) for y in self.check_grid])
            if not np.all(np.diff(vals) < 0):
                raise ValueError(f"{name} must be strictly decreasing on the check grid")


def linear_shaping(a1: float, a2: float, f1: Scalar, f2: Scalar, chi=None) -> PlanarSystem:
    """System with ``g_i(y) = a_i * y``; ``chi`` defaults to ``(sin t, cos t)``."""
    if not (a1 < 0 and a2 < 0):
        raise ValueError("shaping gains must be negative")
    if chi is None:
        chi = (math.sin, math.cos, math.cos, lambda t: -math.sin(t))
    c1, c2, d1, d2 = chi
    return PlanarSystem(f1, f2, c1, c2, d1, d2, lambda y: a1 * y, lambda y: a2 * y)


def canonize(x: np.ndarray, t: float, sys: PlanarSystem) -> np.ndarray:
    """Tracking-error coordinates ``x - chi(t)``."""
    return np.array([x[0] - sys.chi1(t), x[1] - sys.chi2(t)])


def decanonize(y: np.ndarray, t: float, sys: PlanarSystem) -> np.ndarray:
    return np.array([y[0] + sys.chi1(t), y[1] + sys.chi2(t)])


def control_2d(x: np.ndarray, t: float, sys: PlanarSystem) -> tuple[float, float]:
    u1 = sys.g1(x[0] - sys.chi1(t)) + sys.dchi1(t) - sys.f1(x[1])
    u2 = sys.g2(x[1] - sys.chi2(t)) + sys.dchi2(t) - sys.f2(x[0])
    return u1, u2


def closed_loop_rates(t: float, x: np.ndarray, sys: PlanarSystem) -> np.ndarray:
    u1, u2 = control_2d(x, t, sys)
    return np.array([sys.f1(x[1]) + u1, sys.f2(x[0]) + u2])


@dataclass
class PlanarTrajectory:
    t: np.ndarray
    x: np.ndarray  # (n, 2)
    y: np.ndarray  # (n, 2)
    V: np.ndarray
    dV: np.ndarray  # dV/dt from the logged closed-loop rates

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.t,
            "x1": self.x[:, 0],
            "x2": self.x[:, 1],
            "y1": self.y[:, 0],
            "y2": self.y[:, 1],
            "V": self.V,
            "dV": self.dV,
        }


def simulate_2d(sys: PlanarSystem, x0, t_final: float, dt: float) -> PlanarTrajectory:
    """RK4 closed loop under :func:`control_2d`, logging error coordinates and ``V``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(round(t_final / dt))
    ts = np.arange(n + 1) * dt
    xs = np.empty((n + 1, 2))
    xs[0] = x0
    rhs = lambda tt, xx: closed_loop_rates(tt, xx, sys)
    for i in range(n):
        xs[i + 1] = rk4_step(rhs, xs[i], ts[i], dt)
    ys = np.array([canonize(xs[i], ts[i], sys) for i in range(n + 1)])
    V = ys[:, 0] ** 2 + ys[:, 1] ** 2
    dV = np.empty(n + 1)
    for i in range(n + 1):
        r = closed_loop_rates(ts[i], xs[i], sys)
        dy1 = r[0] - sys.dchi1(ts[i])
        dy2 = r[1] - sys.dchi2(ts[i])
        dV[i] = 2.0 * (ys[i, 0] * dy1 + ys[i, 1] * dy2)
    return PlanarTrajectory(ts, xs, ys, V, dV)


def demo_system(a1: float = -1.0, a2: float = -2.0) -> PlanarSystem:
    """Built-in demonstration: nonlinear cross-coupling tracking ``(sin t, cos t)``."""
    return linear_shaping(a1, a2, lambda x2: x2**3 - x2, lambda x1: math.sin(2.0 * x1))
