import math

import numpy as np
import pytest

import sleeptrack as st


def test_builtin_networks():
    a = st.network("A")
    assert a.num_sensors == 41
    assert a.num_states == 41
    assert a.kernel.shape == (42, 42)
    assert st.network("C").is_finite is False
    with pytest.raises(st.ConfigError):
        st.network("D")


def test_lifetime_of_a_is_the_gamblers_ruin_time():
    mean, se, exact = st.expected_lifetime("A")
    assert exact
    assert abs(mean - 21 * 21) < 1e-9


def test_filter_pins_a_perfect_reading():
    prior = np.zeros(42)
    prior[20] = 1.0
    readings = [0.0] * 41
    readings[21] = 1.0
    post = st.belief_update("A", prior, readings)
    assert post[21] == pytest.approx(1.0)
    readings[30] = 1.0
    with pytest.raises(st.InconsistentObservation):
        st.belief_update("A", prior, readings)


def test_tables_and_solvers():
    t = st.tdelta_table("A", 0.1, "asleep", samples=50)
    assert t.shape == (41, 41)
    assert t[20, 19] == pytest.approx(0.5)
    values, sleep, iterations = st.qmdp_solve("A", 0.1, t, 19, 882)
    assert len(values) == 41 and len(sleep) == 41
    assert iterations >= 1
    belief = np.zeros(42)
    belief[20] = 1.0
    assert st.fcr_sleep_time("A", 0.1, np.zeros((41, 41)), belief, 0, 882) == st.NEVER_WAKE


def test_sweep_endpoints():
    pts = st.sweep("A", ["all-awake", "all-asleep"], [0.1], runs=5)
    awake, asleep = pts
    assert awake["tracking_per_time"] == 0.0
    assert awake["energy_per_time"] > 0.0
    assert asleep["energy_per_time"] == 0.0
    assert asleep["runs"] == 5
    with pytest.raises(st.ConfigError):
        st.sweep("A", ["random"], [0.1], runs=1)


def test_lower_bound_is_finite():
    (b,) = st.lower_bound("B", [0.1], restarts=1, steps=2)
    assert math.isfinite(b["bound_per_time"])
    assert b["bound_per_time"] == pytest.approx(b["tracking_per_time"] + b["energy_per_time"])
