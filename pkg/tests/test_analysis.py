import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clfcascade.alpha_manifold import ManeuverProgram
from clfcascade.analysis import (
    RobustnessTolerances,
    clf_increases,
    clf_monotone_after,
    clf_value,
    compute_metrics,
    decay_rate,
    robustness_compare,
)
from clfcascade.closed_loop import LOG_COLUMNS, ExtendedState, TrajectoryLog
from clfcascade.errors import EmptyWindow, GridMismatch

PROG = ManeuverProgram(0.0, 0.0, 0.3)


def synthetic_log(theta_err, pitch_err=None, dt=0.01, flags=None) -> TrajectoryLog:
    n = len(theta_err)
    t = np.arange(n) * dt
    pitch_err = np.zeros(n) if pitch_err is None else pitch_err
    data = {c: np.zeros(n) for c in LOG_COLUMNS}
    data["t"] = t
    data["theta"] = np.asarray(theta_err, float)
    data["alpha"] = PROG.pitch_target + pitch_err - data["theta"]
    data["v"] = np.full(n, 100.0)
    data["V"] = data["theta"] ** 2 + pitch_err**2
    data["sat_flags"] = np.zeros(n, dtype=np.int64) if flags is None else np.asarray(flags, np.int64)
    return TrajectoryLog(data, dt)


def test_clf_examples():
    assert clf_value(ExtendedState(100, 0.0, 0.3, 0, 0, 0), 0.0, PROG) == 0.0
    assert clf_value(ExtendedState(100, 0.1, 0.2, 0, 0, 0), 0.0, PROG) == pytest.approx(0.01)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_clf_is_even(e1, e2):
    a = clf_value(ExtendedState(100, e1, 0.3 + e2 - e1, 0, 0, 0), 0.0, PROG)
    b = clf_value(ExtendedState(100, -e1, 0.3 - e2 + e1, 0, 0, 0), 0.0, PROG)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("a", [-0.3, -0.8, -2.0])
def test_decay_rate_of_synthetic_exponential(a):
    t = np.arange(0, 30, 0.001)
    assert decay_rate(t, np.exp(a * t)) == pytest.approx(a, rel=1e-3)


def test_empty_window_is_reported_not_raised():
    log = synthetic_log(np.zeros(100))
    with pytest.raises(EmptyWindow):
        decay_rate(log["t"], log["theta"])
    m = compute_metrics(log, PROG)
    assert m.theta_decay_rate is None and m.notes
    assert m.final_theta_err == 0 and m.sup_pitch_err == 0 and m.sup_theta_err == 0


def test_saturation_duty_counts_flagged_steps():
    flags = [0, 1, 3, 2, 0, 4, 0, 0, 1, 0]
    m = compute_metrics(synthetic_log(np.zeros(10), flags=flags), PROG)
    assert (m.duty_delta_m, m.duty_delta_p, m.duty_thrust) == (0.3, 0.2, 0.1)


def test_metrics_are_pure():
    log = synthetic_log(0.05 * np.exp(-0.5 * np.arange(0, 30, 0.01)))
    assert compute_metrics(log, PROG) == compute_metrics(log, PROG)


def test_monotone_after():
    t = np.arange(6.0)
    assert clf_monotone_after(t, np.array([1, 2, 3, 2, 1, 0.0])) == 2.0
    assert clf_monotone_after(t, np.array([5, 4, 3, 2, 1, 0.0])) == 0.0
    assert clf_monotone_after(t, np.array([5, 4, 3, 2, 1, 2.0])) == np.inf
    assert clf_increases(t, np.array([1, 2, 3, 2, 1, 0.0]), 1.0) == 1


def tol(**limits):
    return RobustnessTolerances(limits or {"theta": 0.01, "v": 1.0}, final_error=0.05)


def test_identical_logs_pass():
    log = synthetic_log(0.04 * np.exp(-np.arange(0, 10, 0.01)))
    v = robustness_compare(log, log, tol(), PROG)
    assert v.passed and v.label == "PASS"
    assert all(d == 0 for d in v.sup_diff.values())


def test_diverging_log_fails_with_first_exceedance():
    t = np.arange(0, 10, 0.01)
    good = synthetic_log(0.04 * np.exp(-t))
    bad = synthetic_log(0.04 * np.exp(-t) + np.where(t > 3.0, 0.1 * (t - 3.0), 0.0))
    v = robustness_compare(good, bad, tol(), PROG)
    assert not v.passed
    assert v.first_exceedance["theta"] == pytest.approx(3.11, abs=0.011)
    assert not v.converged["full"] and v.converged["simplified"]


def test_incomplete_run_does_not_converge():
    log = synthetic_log(np.zeros(100))
    v = robustness_compare(log, log, tol(), PROG, t_final=5.0)
    assert not v.passed


def test_grid_mismatch():
    a = synthetic_log(np.zeros(10), dt=0.01)
    b = synthetic_log(np.zeros(10), dt=0.02)
    with pytest.raises(GridMismatch):
        robustness_compare(a, b, tol(), PROG)


def test_tolerance_validation():
    with pytest.raises(ValueError):
        RobustnessTolerances({"wind": 1.0})
    with pytest.raises(ValueError):
        RobustnessTolerances({"v": -1.0})
