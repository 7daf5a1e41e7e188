"""Property-based checks of the invariants stated for each module."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from measengine.calibration import DispersiveConfig, reflection_model, stark_and_dephasing
from measengine.dynamics import (
    BlochState,
    DriveConfig,
    QubitConfig,
    evolve_driven,
    evolve_driven_rk4,
    evolve_free,
    ideal_qubit,
    rotate,
)
from measengine.engine import CycleSchedule, ideal_readout, run_engine_averaged
from measengine.ensemble import expand, default_tls
from measengine.field import gain, photon_energy, quadrature_variances

GC = 2 * math.pi * 383.0


@st.composite
def unit_vectors(draw):
    v = np.array(draw(st.tuples(*[st.floats(-1, 1)] * 3)))
    n = np.linalg.norm(v)
    if n < 1e-3:
        return np.array([1.0, 0.0, 0.0])
    return v / n


@st.composite
def pure_states(draw):
    return BlochState.from_array(draw(unit_vectors()))


@st.composite
def states(draw):
    r = draw(st.floats(0, 1))
    return BlochState.from_array(r * draw(unit_vectors()))


@st.composite
def qubits(draw):
    t1 = draw(st.floats(5e-6, 200e-6))
    t2 = draw(st.floats(0.2, 1.0)) * 2 * t1
    return QubitConfig(
        delta=draw(st.floats(-2e5, 2e5)),
        t1=t1,
        t2=t2,
        gamma_c=draw(st.floats(0, 1)) / t1,
        p_th=draw(st.floats(0, 0.2)),
    )


@st.composite
def drives(draw):
    return DriveConfig(
        omega=draw(st.floats(0, 5e5)), t_r=draw(st.floats(1e-7, 2e-5)), phi=draw(st.floats(-math.pi, math.pi))
    )


@settings(max_examples=100, deadline=None)
@given(pure_states(), qubits(), drives())
def test_norm_never_grows_from_pure_states(s, q, d):
    assert evolve_driven(s, q, d, d.t_r).norm <= s.norm + 1e-9
    assert evolve_free(s, q, d.t_r).norm <= s.norm + 1e-9


@settings(max_examples=100, deadline=None)
@given(states(), st.floats(1e-6, 1e-4), drives())
def test_norm_never_grows_under_unital_dynamics(s, t2, d):
    q = QubitConfig(t1=math.inf, t2=t2, p_th=0.0)
    assert evolve_driven(s, q, d, d.t_r).norm <= s.norm + 1e-9


@settings(max_examples=100, deadline=None)
@given(states(), qubits(), drives())
def test_matches_brute_force_rk4(s, q, d):
    exact = evolve_driven(s, q, d, d.t_r)
    brute = evolve_driven_rk4(s, q, d, d.t_r, steps=1000)
    np.testing.assert_allclose(exact.as_array(), brute.as_array(), atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(states(), qubits(), drives(), st.floats(0, 1))
def test_composition(s, q, d, frac):
    t1, t2 = frac * d.t_r, (1 - frac) * d.t_r
    once = evolve_driven(s, q, d, d.t_r)
    twice = evolve_driven(evolve_driven(s, q, d, t1), q, d, t2)
    np.testing.assert_allclose(once.as_array(), twice.as_array(), atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(states(), drives(), st.floats(-2e5, 2e5))
def test_lossless_drive_is_a_rotation(s, d, delta):
    q = ideal_qubit(delta=delta)
    h = np.array([d.omega * math.sin(d.phi), d.omega * math.cos(d.phi), delta])
    norm = np.linalg.norm(h)
    if norm == 0:
        expected = s
    else:
        expected = rotate(s, h / norm, norm * d.t_r)
    np.testing.assert_allclose(evolve_driven(s, q, d, d.t_r).as_array(), expected.as_array(), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, math.pi - 0.01), st.floats(1e-6, 2e-5))
def test_work_equals_qubit_energy_drop(theta, t_r):
    q = ideal_qubit()
    d = DriveConfig(theta / t_r, t_r)
    res = run_engine_averaged(q, CycleSchedule(1, d, "feedback", ideal_readout()), spontaneous=False)
    expected = photon_energy(q.f_q) / 2 * math.sin(theta)
    assert math.isclose(res.records[0].work, expected, rel_tol=1e-9)


@given(states())
def test_added_variances_are_bounded(s):
    v = quadrature_variances(s, ideal_qubit())
    assert 0 <= v.var_x_added <= 2 * GC and 0 <= v.var_y_added <= 2 * GC


@given(states(), st.floats(10 * GC, 1e6), st.floats(1.01, 10))
def test_gain_saturates_monotonically(s, omega, factor):
    if s.x < 0:
        s = BlochState(-s.x, s.y, s.z)
    q = ideal_qubit()
    weak = gain(s, DriveConfig(omega, 1e-6), q) - 1
    strong = gain(s, DriveConfig(omega * factor, 1e-6), q) - 1
    assert 0 <= strong <= weak


@given(st.floats(-1e9, 1e9), st.floats(1e5, 1e8), st.floats(1e5, 1e8), st.floats(0, 1e8))
def test_measurement_dephasing_is_non_negative(dw, chi, kappa, eps):
    _, g = stark_and_dephasing(DispersiveConfig(chi, kappa, eps, dw))
    assert g >= 0


@given(st.floats(-1e6, 1e6), st.floats(0, 1e6), st.floats(0, 1))
def test_reflection_hermitian_symmetry(delta, omega, p_pol):
    g1, g2 = 1 / 25.4e-6, 1 / 32e-6
    a = reflection_model(delta, GC, g1, g2, omega, p_pol)
    b = reflection_model(-delta, GC, g1, g2, omega, p_pol)
    assert abs(a - b.conjugate()) < 1e-14
    assert abs(a) <= 1 + GC / g2


@given(st.floats(0, 1), st.floats(0, 1))
def test_ensemble_weights_are_conserved(p1, p2):
    assert math.isclose(sum(w for w, _ in expand(default_tls(p=(p1, p2)))), 1.0, abs_tol=1e-12)
