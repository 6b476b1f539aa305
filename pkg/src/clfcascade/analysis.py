"""Tracking-error metrics, CLF monitoring and simplified-versus-full plant comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from clfcascade.alpha_manifold import Gains, ManeuverProgram
from clfcascade.cascade import Saturation
from clfcascade.closed_loop import ExtendedState, TrajectoryLog
from clfcascade.closed_loop import clf_value as _clf
from clfcascade.errors import EmptyWindow, GridMismatch

DECAY_WINDOW = (1e-8, 1e-2)
STATE_CHANNELS = ("v", "theta", "alpha", "q", "h", "delta_p")


def clf_value(s: ExtendedState, t: float, prog: ManeuverProgram) -> float:
    """``theta_err^2 + pitch_err^2`` at one state."""
    return _clf(s.theta, s.alpha + s.theta, t, prog)


def tracking_errors(log: TrajectoryLog, prog: ManeuverProgram) -> tuple[np.ndarray, np.ndarray]:
    """Flight-path and pitch-attitude errors recomputed from the logged states."""
    t = log["t"]
    th_err = log["theta"] - prog.theta_m * (1.0 + np.sin(prog.omega * t))
    pt_err = log["alpha"] + log["theta"] - prog.pitch_target
    return th_err, pt_err


def decay_rate(t: np.ndarray, err: np.ndarray, window: tuple[float, float] = DECAY_WINDOW) -> float:
    """Least-squares slope of ``log|err|`` over samples with ``|err|`` inside ``window``."""
    mag = np.abs(err)
    m = (mag >= window[0]) & (mag <= window[1])
    if m.sum() < 2:
        raise EmptyWindow(f"{int(m.sum())} samples with |error| in [{window[0]:g}, {window[1]:g}]")
    slope, _ = np.polyfit(t[m], np.log(mag[m]), 1)
    return float(slope)


def clf_monotone_after(t: np.ndarray, V: np.ndarray) -> float:
    """Earliest logged time from which ``V`` never increases again (``inf`` if it rises on the last step)."""
    if len(V) < 2:
        return float(t[0]) if len(t) else 0.0
    rising = np.nonzero(np.diff(V) > 0)[0]
    if len(rising) == 0:
        return float(t[0])
    i = rising[-1] + 1
    return float(t[i]) if i < len(t) - 1 else math.inf


def clf_increases(t: np.ndarray, V: np.ndarray, t_start: float) -> int:
    """Number of logged steps with ``V[k+1] > V[k]`` and ``t[k] >= t_start``."""
    m = t[:-1] >= t_start
    return int(np.sum(np.diff(V)[m] > 0))


@dataclass(frozen=True)
class RunMetrics:
    final_theta_err: float
    final_pitch_err: float
    sup_theta_err: float
    sup_pitch_err: float
    clf_monotone_after: float
    theta_decay_rate: float | None
    pitch_decay_rate: float | None
    duty_delta_m: float
    duty_delta_p: float
    duty_thrust: float
    notes: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "final_theta_err": self.final_theta_err,
            "final_pitch_err": self.final_pitch_err,
            "sup_theta_err": self.sup_theta_err,
            "sup_pitch_err": self.sup_pitch_err,
            "clf_monotone_after": self.clf_monotone_after,
            "theta_decay_rate": self.theta_decay_rate,
            "pitch_decay_rate": self.pitch_decay_rate,
            "duty_delta_m": self.duty_delta_m,
            "duty_delta_p": self.duty_delta_p,
            "duty_thrust": self.duty_thrust,
            "notes": list(self.notes),
        }


def compute_metrics(log: TrajectoryLog, prog: ManeuverProgram, gains: Gains | None = None) -> RunMetrics:
    """Summarize a run. An empty decay window is recorded in ``notes``, not raised."""
    if len(log) == 0:
        raise ValueError("cannot compute metrics of an empty log")
    t = log["t"]
    th_err, pt_err = tracking_errors(log, prog)
    notes = []
    rates = []
    for name, err in (("theta", th_err), ("pitch", pt_err)):
        try:
            rates.append(decay_rate(t, err))
        except EmptyWindow as exc:
            rates.append(None)
            notes.append(f"{name} decay rate: empty window ({exc})")
    flags = log["sat_flags"]
    n = len(flags)

    def duty(bit: Saturation) -> float:
        return float(np.count_nonzero(flags & int(bit))) / n

    return RunMetrics(
        final_theta_err=float(abs(th_err[-1])),
        final_pitch_err=float(abs(pt_err[-1])),
        sup_theta_err=float(np.max(np.abs(th_err))),
        sup_pitch_err=float(np.max(np.abs(pt_err))),
        clf_monotone_after=clf_monotone_after(t, log["V"]),
        theta_decay_rate=rates[0],
        pitch_decay_rate=rates[1],
        duty_delta_m=duty(Saturation.DELTA_M),
        duty_delta_p=duty(Saturation.DELTA_P),
        duty_thrust=duty(Saturation.THRUST),
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class RobustnessTolerances:
    """Per-channel sup-norm limits on simplified-minus-full differences, plus the convergence threshold."""

    limits: dict[str, float]
    final_error: float = 0.05

    def __post_init__(self) -> None:
        unknown = set(self.limits) - set(STATE_CHANNELS)
        if unknown:
            raise ValueError(f"unknown comparison channel(s): {sorted(unknown)}")
        for k, v in self.limits.items():
            if not v > 0:
                raise ValueError(f"limit for {k} must be positive")
        if not self.final_error > 0:
            raise ValueError("final_error threshold must be positive")


@dataclass(frozen=True)
class RobustnessVerdict:
    passed: bool
    sup_diff: dict[str, float]
    first_exceedance: dict[str, float]
    converged: dict[str, bool]
    final_errors: dict[str, tuple[float, float]]
    reasons: tuple[str, ...]

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def as_dict(self) -> dict:
        return {
            "verdict": self.label,
            "sup_diff": self.sup_diff,
            "first_exceedance": self.first_exceedance,
            "converged": self.converged,
            "final_errors": {k: list(v) for k, v in self.final_errors.items()},
            "reasons": list(self.reasons),
        }


def robustness_compare(
    log_simplified: TrajectoryLog,
    log_full: TrajectoryLog,
    tolerances: RobustnessTolerances,
    prog: ManeuverProgram,
    t_final: float | None = None,
) -> RobustnessVerdict:
    """Channelwise comparison of two runs of the same scenario on different plants.

    Runs that stopped early are compared on their common prefix and count as
    not converged. ``t_final`` is the intended end time; a log ending before
    it did not complete.
    """
    ts, tf = log_simplified["t"], log_full["t"]
    n = min(len(ts), len(tf))
    if n == 0:
        raise GridMismatch("empty log")
    if not np.array_equal(ts[:n], tf[:n]) or log_simplified.dt != log_full.dt:
        raise GridMismatch("logs do not share a time grid")
    reasons = []
    sup_diff = {}
    first = {}
    for ch, lim in tolerances.limits.items():
        d = np.abs(log_simplified[ch][:n] - log_full[ch][:n])
        sup_diff[ch] = float(np.max(d))
        over = np.nonzero(d > lim)[0]
        if len(over):
            first[ch] = float(ts[over[0]])
            reasons.append(f"{ch}: |diff| {sup_diff[ch]:.3e} exceeds {lim:g} first at t={first[ch]:.4f}")
    converged = {}
    finals = {}
    for name, lg in (("simplified", log_simplified), ("full", log_full)):
        th, pt = tracking_errors(lg, prog)
        fe = (float(abs(th[-1])), float(abs(pt[-1])))
        finals[name] = fe
        complete = lg.ok and (t_final is None or lg["t"][-1] >= t_final - 0.5 * lg.dt)
        ok = complete and max(fe) <= tolerances.final_error
        converged[name] = bool(ok)
        if not complete:
            reasons.append(f"{name} run stopped at t={lg['t'][-1]:.4f}: {lg.failure}")
        elif not ok:
            reasons.append(f"{name} final errors {fe[0]:.3e}, {fe[1]:.3e} above {tolerances.final_error:g}")
    passed = not reasons
    return RobustnessVerdict(passed, sup_diff, first, converged, finals, tuple(reasons))
