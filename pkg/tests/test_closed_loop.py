import math

import numpy as np
import pytest

from clfcascade.closed_loop import (
    ExtendedState,
    ThrustSchedule,
    clf_value,
    on_manifold_state,
    rk4_step,
    simulate,
)


def test_rk4_one_step_taylor_oracle():
    x = rk4_step(lambda t, x: -x, np.array([1.0]), 0.0, 0.1)
    h = 0.1
    taylor = 1 - h + h**2 / 2 - h**3 / 6 + h**4 / 24  # RK4 is exact through 4th order on linear rhs
    assert x[0] == pytest.approx(taylor, abs=1e-15)
    assert abs(x[0] - math.exp(-0.1)) < 1e-7


def test_rk4_zero_rhs_is_identity():
    x0 = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros_like(x), x0, 0.0, 0.5), x0)


def test_rk4_local_error_scales_with_fifth_power():
    e = [abs(rk4_step(lambda t, x: -x, np.array([1.0]), 0.0, h)[0] - math.exp(-h)) for h in (0.1, 0.05)]
    assert 2**4.8 < e[0] / e[1] < 2**5.2


def test_rk4_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        rk4_step(lambda t, x: x, np.array([1.0]), 0.0, 0.0)


def test_thrust_schedule_right_continuous(baseline):
    sch = ThrustSchedule(((0.0, 100.0), (5.0, 60.0)))
    assert sch(4.999) == 100.0 and sch(5.0) == 60.0 and sch(-1.0) == 100.0
    assert ThrustSchedule.constant(7.0)(123.0) == 7.0
    with pytest.raises(ValueError):
        ThrustSchedule(((0.0, 1.0), (0.0, 2.0)))
    with pytest.raises(ValueError):
        ThrustSchedule(((0.0, 1e9),)).check_bounds(baseline.aircraft)


def _run(sc, x0, t_final, dt=1e-3, **kw):
    return simulate(sc.aircraft, sc.program, sc.gains, sc.thrust, x0, dt, t_final, **kw)


def test_on_manifold_start_stays_on_manifold(baseline):
    x0 = baseline.initial_state()
    log = _run(baseline, x0, 3.0)
    assert log.ok
    assert np.max(np.abs(log["theta_err"])) < 1e-8
    assert np.max(np.abs(log["pitch_err"])) < 1e-8


def test_flight_path_error_follows_exponential(baseline):
    p, prog, g = baseline.aircraft, baseline.program, baseline.gains
    e0 = 0.05
    x0 = on_manifold_state(p, prog, g, baseline.thrust(0.0), 90.0, 3000.0, theta_err=e0)
    log = _run(baseline, x0, 5.0)
    ref = e0 * np.exp(g.a1 * log["t"])
    assert np.max(np.abs(log["theta_err"] - ref)) <= 1e-3 * e0


def test_halving_the_step_converges_fourth_order(baseline):
    p, prog, g = baseline.aircraft, baseline.program, baseline.gains
    x0 = on_manifold_state(p, prog, g, baseline.thrust(0.0), 90.0, 3000.0, theta_err=0.05, pitch_err=0.02)
    runs = [_run(baseline, x0, 1.0, dt, derivatives="analytic") for dt in (0.02, 0.01, 0.005)]
    ends = [np.array([r[c][-1] for c in ("v", "theta", "alpha", "q", "h", "delta_p")]) for r in runs]
    d1 = np.max(np.abs(ends[0] - ends[1]) / (1 + np.abs(ends[1])))
    d2 = np.max(np.abs(ends[1] - ends[2]) / (1 + np.abs(ends[2])))
    assert math.log2(d1 / d2) > 3.5


def test_log_grid_and_clf(baseline):
    x0 = baseline.initial_state()
    log = _run(baseline, x0, 0.5)
    t = log["t"]
    assert len(log) == 501
    assert np.all(np.diff(t) > 0)
    np.testing.assert_allclose(np.diff(t), 1e-3, rtol=1e-9)
    for i in (0, 100, 500):
        pitch = log["alpha"][i] + log["theta"][i]
        assert log["V"][i] == clf_value(log["theta"][i], pitch, t[i], baseline.program)


def test_failure_returns_partial_log(baseline):
    sch = ThrustSchedule(((0.0, baseline.thrust(0.0)), (0.5, 0.0)))
    x0 = baseline.initial_state()
    log = simulate(baseline.aircraft, baseline.program, baseline.gains, sch, x0, 1e-3, 2.0)
    assert not log.ok
    assert "NozzleLawSingular" in log.failure
    assert log.failure_time == pytest.approx(0.499, abs=2e-3)
    assert log["t"][-1] <= log.failure_time


def test_nozzle_deflection_stays_within_bound(baseline):
    p = baseline.aircraft
    x0 = on_manifold_state(p, baseline.program, baseline.gains, baseline.thrust(0.0), 90.0, 3000.0, theta_err=0.05)
    x0 = ExtendedState(x0.v, x0.theta, x0.alpha, x0.q, x0.h, p.dp_max)
    log = _run(baseline, x0, 0.5)
    assert np.all(np.abs(log["delta_p"]) <= p.dp_max)
    assert np.all(np.abs(log["delta_m"]) <= p.dm_max)


def test_bad_arguments(baseline):
    x0 = baseline.initial_state()
    with pytest.raises(ValueError):
        _run(baseline, x0, 1.0, plant="other")
    with pytest.raises(ValueError):
        _run(baseline, x0, 1.0, derivatives="other")
    with pytest.raises(ValueError):
        _run(baseline, x0, 1.0, dt=0.0)


def test_extended_state_round_trip():
    x = ExtendedState(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
    assert ExtendedState.from_array(x.as_array()) == x
    assert x.state.pitch == 5.0
