"""Lyapunov-function cascade control of a thrust-vectoring aircraft in pitch."""

from clfcascade.aero_env import NOMINAL, AircraftParams, air_density
from clfcascade.alpha_manifold import Gains, ManeuverProgram, solve_alpha_command
from clfcascade.closed_loop import ExtendedState, ThrustSchedule, TrajectoryLog, simulate
from clfcascade.dynamics import ControlInput, State

__all__ = [
    "NOMINAL",
    "AircraftParams",
    "air_density",
    "Gains",
    "ManeuverProgram",
    "solve_alpha_command",
    "ExtendedState",
    "ThrustSchedule",
    "TrajectoryLog",
    "simulate",
    "ControlInput",
    "State",
]
