"""Atmosphere density and aerodynamic coefficient maps."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from clfcascade.errors import DomainError

RHO0 = 1.2256  # kg/m^3, sea-level density of the model atmosphere
LAPSE = 0.2257e-4  # 1/m
EXPONENT = 4.256
H_CEILING = 1.0 / LAPSE  # base of the power law vanishes here (~44306.6 m)


@dataclass(frozen=True)
class AircraftParams:
    """Physical and aerodynamic constants of the longitudinal model plus control bounds.

    Units: SI, angles in rad. ``xp`` and ``yp`` are signed thrust moment arms
    entering the pitch moment as ``P * (yp + xp * sin(delta_p))``.
    """

    m: float  # kg
    S: float  # m^2
    l: float  # m, mean aerodynamic chord
    Izz: float  # kg m^2
    g: float  # m/s^2
    CX0: float
    k: float
    CYa: float
    CYdm: float
    Cma: float
    Cmdm: float
    Cmq: float
    xp: float  # m
    yp: float  # m
    dm_max: float  # rad
    dp_max: float  # rad
    P_min: float  # N
    P_max: float  # N

    def __post_init__(self) -> None:
        for name in ("m", "S", "l", "Izz", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.Cmdm == 0:
            raise ValueError("Cmdm must be nonzero")
        if not (self.dm_max > 0 and self.dp_max > 0):
            raise ValueError("control deflection bounds must be positive")
        if not 0 <= self.P_min <= self.P_max:
            raise ValueError("thrust bounds must satisfy 0 <= P_min <= P_max")

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AircraftParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown aircraft parameter(s): {sorted(unknown)}")
        missing = known - set(data)
        if missing:
            raise ValueError(f"missing aircraft parameter(s): {sorted(missing)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def replace(self, **changes: float) -> "AircraftParams":
        return AircraftParams(**{**asdict(self), **changes})


# Implementer-chosen values for a light, high-thrust, thrust-vectoring
# demonstrator. Nothing here comes from a published data set. The lift slope
# is low and the thrust-to-weight ratio high so that nozzle deflection has
# enough authority over the flight path to hold a constant pitch attitude.
NOMINAL = AircraftParams(
    m=9000.0,
    S=28.0,
    l=3.5,
    Izz=75000.0,
    g=9.81,
    CX0=0.05,
    k=0.5,
    CYa=1.2,
    CYdm=0.25,
    Cma=-0.15,
    Cmdm=-0.9,
    Cmq=-6.0,
    xp=-0.5,
    yp=0.0,
    dm_max=0.45,
    dp_max=0.35,
    P_min=0.0,
    P_max=120000.0,
)


def air_density(h: float) -> float:
    """Density of the power-law model atmosphere at altitude ``h`` (m), kg/m^3.

    Valid for ``0 <= h <= H_CEILING``; the value reaches zero at the ceiling.
    """
    if not 0.0 <= h <= H_CEILING:
        raise DomainError(f"altitude {h!r} m outside [0, {H_CEILING:.1f}] m")
    base = 1.0 - LAPSE * h
    return RHO0 * base**EXPONENT


def air_density_slope(h: float) -> float:
    """d(rho)/dh of :func:`air_density`, kg/m^4."""
    if not 0.0 <= h <= H_CEILING:
        raise DomainError(f"altitude {h!r} m outside [0, {H_CEILING:.1f}] m")
    base = 1.0 - LAPSE * h
    return -RHO0 * EXPONENT * LAPSE * base ** (EXPONENT - 1.0)


def aero_coefficients(
    alpha: float,
    q: float,
    v: float,
    delta_m: float,
    p: AircraftParams,
    simplified: bool = False,
) -> tuple[float, float, float]:
    """Return ``(C_Y, C_X, C_m)``.

    The simplified map drops the stabilizer contribution to lift; drag and
    pitching moment are built the same way in both modes.
    """
    if not v > 0:
        raise DomainError(f"airspeed must be positive, got {v!r}")
    s2a = math.sin(2.0 * alpha)
    cy = p.CYa * s2a
    if not simplified:
        cy += p.CYdm * delta_m
    cx = p.CX0 + p.k * cy * cy
    cm = p.Cma * s2a + p.Cmdm * delta_m + p.Cmq * (p.l / v) * q
    return cy, cx, cm
