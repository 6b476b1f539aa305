import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clfcascade import canonical_2d as c2d
from clfcascade.verification import random_planar_system


def test_canonize_by_hand():
    s = c2d.demo_system()
    np.testing.assert_allclose(c2d.canonize(np.array([1.0, 1.0]), 0.0, s), [1.0, 0.0], atol=0)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 50))
def test_canonize_round_trip(x1, x2, t):
    s = c2d.demo_system()
    x = np.array([x1, x2])
    np.testing.assert_allclose(c2d.decanonize(c2d.canonize(x, t, s), t, s), x, rtol=1e-15, atol=1e-14)


@given(st.floats(0, 20))
def test_on_curve_rates_equal_curve_derivative(t):
    s = c2d.demo_system()
    x = c2d.decanonize(np.zeros(2), t, s)
    r = c2d.closed_loop_rates(t, x, s)
    np.testing.assert_allclose(r, [s.dchi1(t), s.dchi2(t)], atol=1e-14)


def test_no_drift_constant_curve_gives_pure_shaping():
    s = c2d.linear_shaping(-1.5, -0.5, lambda x: 0.0, lambda x: 0.0, chi=(lambda t: 2.0, lambda t: -1.0, lambda t: 0.0, lambda t: 0.0))
    u = c2d.control_2d(np.array([3.0, 1.0]), 0.7, s)
    assert u == (pytest.approx(-1.5), pytest.approx(-1.0))


def test_shaping_maps_are_validated():
    f = lambda x: 0.0
    with pytest.raises(ValueError, match="must be 0"):
        c2d.PlanarSystem(f, f, f, f, f, f, lambda y: -y + 1.0, lambda y: -y)
    with pytest.raises(ValueError, match="decreasing"):
        c2d.PlanarSystem(f, f, f, f, f, f, lambda y: y, lambda y: -y)
    with pytest.raises(ValueError):
        c2d.linear_shaping(1.0, -1.0, f, f)


def test_linear_shaping_gives_exponential_errors():
    s = c2d.demo_system(-0.7, -1.3)
    x0 = np.array([0.5, 2.0])
    tr = c2d.simulate_2d(s, x0, 5.0, 1e-3)
    y0 = c2d.canonize(x0, 0.0, s)
    exact = np.column_stack([y0[0] * np.exp(-0.7 * tr.t), y0[1] * np.exp(-1.3 * tr.t)])
    assert np.max(np.abs(tr.y - exact)) <= 1e-6


def test_logged_error_rates_equal_shaping_maps():
    s = c2d.demo_system()
    tr = c2d.simulate_2d(s, [2.0, -1.0], 2.0, 1e-2)
    for i in (0, 50, 200):
        r = c2d.closed_loop_rates(tr.t[i], tr.x[i], s)
        dy = r - np.array([s.dchi1(tr.t[i]), s.dchi2(tr.t[i])])
        np.testing.assert_allclose(dy, [s.g1(tr.y[i, 0]), s.g2(tr.y[i, 1])], atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_clf_never_increases_on_random_systems(seed):
    rng = np.random.default_rng(seed)
    s = random_planar_system(rng)
    tr = c2d.simulate_2d(s, c2d.decanonize(rng.uniform(-1, 1, 2), 0.0, s), 2.0, 1e-2)
    assert np.all(tr.dV <= 0)
    assert np.all(np.diff(tr.V) <= 0)


def test_start_on_curve_stays_on_curve():
    s = c2d.demo_system()
    tr = c2d.simulate_2d(s, c2d.decanonize(np.zeros(2), 0.0, s), 5.0, 1e-3)
    assert np.max(np.abs(tr.y)) <= 1e-9
