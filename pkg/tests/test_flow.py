import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BUILTINS, random_rational_vector, rational_vectors, rationals, validate_schema
from ea_lab import exact
from ea_lab.errors import InvalidInput
from ea_lab.flow import (BLOWUP_DETECTED, HORIZON_REACHED, STEP_FAILURE, estimate_blowup_time, field_function,
                         geodesic_field, integrate, projection_equivariance_residual, subspace_invariance_residual,
                         symmetric_field, trajectory_csv, trajectory_sidecar)
from ea_lab.lie import bracket, killing_form, load_builtin
from ea_lab.metric import builtin_metric, killing_metric, SL2_A

F = Fraction
V0 = (F(3, 8), F(-1, 2), F(1))


@given(rationals(), rationals(), rationals())
@settings(max_examples=100, deadline=None)
def test_sol_field_formula(x, y, z):
    assert geodesic_field(builtin_metric("sol"), (x, y, z)) == (y * y - x * z, -y * z, z * z)


@given(rationals(), rationals(), rationals())
@settings(max_examples=100, deadline=None)
def test_euc_field_formula(x, y, z):
    assert geodesic_field(builtin_metric("euc"), (x, y, z)) == (x * y - y * z, z * z, -y * z)


def test_sl2_v0_is_radial_with_unit_factor():
    assert geodesic_field(builtin_metric("sl2"), V0) == V0


@given(rational_vectors(3), rationals(), st.sampled_from(["sl2", "sol", "euc"]))
@settings(max_examples=60, deadline=None)
def test_two_homogeneous(x, c, name):
    ma = builtin_metric(name)
    assert geodesic_field(ma, tuple(c * v for v in x)) == tuple(c * c * v for v in geodesic_field(ma, x))


@given(rational_vectors(3))
@settings(max_examples=60, deadline=None)
def test_biinvariant_field_vanishes(x):
    assert not any(geodesic_field(killing_metric(load_builtin("sl2")), x))


@given(rational_vectors(3), rational_vectors(3))
@settings(max_examples=40, deadline=None)
def test_polarisation(x, y):
    ma = builtin_metric("sl2")
    s = symmetric_field(ma, x, y)
    assert symmetric_field(ma, x, x) == geodesic_field(ma, x)
    assert s == symmetric_field(ma, y, x)
    assert np.allclose(symmetric_field(ma, np.array(x, float), np.array(y, float)), np.array(s, float))


def test_float_field_matches_exact(rng):
    for name in BUILTINS:
        ma = builtin_metric(name)
        f = field_function(ma)
        x = random_rational_vector(rng, ma.dim)
        ref = np.array(geodesic_field(ma, x), float)
        assert np.allclose(f(np.array(x, float)), ref, atol=1e-12)
        assert np.allclose(geodesic_field(ma, np.array(x, float)), ref, atol=1e-12)


# --- integration ----------------------------------------------------------------

def test_radial_blowup_matches_closed_form():
    # x(t) = v0 / (1 - t) solves x' = F(x) because F(v0) = v0
    traj = integrate(builtin_metric("sl2"), np.array(V0, float), 10.0)
    assert traj.termination == BLOWUP_DETECTED
    assert abs(traj.blowup_time - 1.0) < 1e-3
    v0 = np.array(V0, float)
    for t, x in zip(traj.times[::50], traj.states[::50]):
        if t < 0.99:
            assert np.allclose(x, v0 / (1 - t), rtol=1e-8)


def test_sol_h_blowup():
    traj = integrate(builtin_metric("sol"), np.array([0.0, 0.0, 1.0]), 10.0)
    assert traj.termination == BLOWUP_DETECTED and abs(traj.blowup_time - 1.0) < 1e-3


def test_constant_and_zero_trajectories():
    traj = integrate(builtin_metric("sol"), np.array([1.0, 0, 0]), 50.0)
    assert traj.termination == HORIZON_REACHED
    assert np.all(traj.states == np.array([1.0, 0, 0]))
    zero = integrate(builtin_metric("sl2"), np.zeros(3), 5.0)
    assert zero.termination == HORIZON_REACHED and not np.any(zero.states)
    assert zero.times[-1] == 5.0


def test_backward_integration_and_time_reversal(rng):
    ma = builtin_metric("sl2")
    for _ in range(5):
        x0 = rng.uniform(-0.5, 0.5, 3)
        back = integrate(ma, x0, -1.0)
        fwd = integrate(ma, -x0, 1.0)
        assert back.termination == fwd.termination == HORIZON_REACHED
        assert np.allclose(back.times, -fwd.times, atol=1e-14)
        assert np.allclose(back.states, -fwd.states, atol=1e-12)


def test_past_blowup_of_negative_v0():
    traj = integrate(builtin_metric("sl2"), -np.array(V0, float), -5.0)
    assert traj.termination == BLOWUP_DETECTED and abs(traj.blowup_time + 1.0) < 1e-3


@pytest.mark.parametrize("name", BUILTINS)
def test_energy_conservation(name, rng):
    ma = builtin_metric(name)
    for _ in range(10):
        x0 = rng.uniform(-0.5, 0.5, ma.dim)
        for horizon in (1.0, -1.0):
            traj = integrate(ma, x0, horizon, 1e-10)
            assert traj.termination == HORIZON_REACHED
            assert traj.energy_drift <= 100 * 1e-10


def test_null_cone_preserved():
    # 2xz + y^2 = 0 for the sol metric at (1, 2, -2)
    ma = builtin_metric("sol")
    x0 = np.array([1.0, 2.0, -2.0])
    assert ma.q(exact.to_fractions([1, 2, -2]), exact.to_fractions([1, 2, -2])) == 0
    traj = integrate(ma, x0, 0.3, 1e-10)
    q = np.einsum("ti,ij,tj->t", traj.states, ma.q_array, traj.states)
    assert np.max(np.abs(q)) <= 100 * 1e-10


def test_step_failure_reported():
    traj = integrate(builtin_metric("sl2"), np.array(V0, float), 10.0, max_steps=5)
    assert traj.termination == STEP_FAILURE and traj.message


def test_integrate_rejects_bad_input():
    with pytest.raises(InvalidInput):
        integrate(builtin_metric("sl2"), np.ones(2), 1.0)
    with pytest.raises(InvalidInput):
        integrate(builtin_metric("sl2"), np.ones(3), 1.0, tol=0)


def test_blowup_estimator_on_exact_profile():
    t = np.linspace(0.9, 0.999, 8)
    assert abs(estimate_blowup_time(t, 1 / (1 - t)) - 1.0) < 1e-12


def test_csv_and_sidecar():
    traj = integrate(builtin_metric("sl2"), np.array([0.1, 0.2, 0.0]), 1.0)
    rows = list(csv.reader(io.StringIO(trajectory_csv(traj))))
    assert rows[0] == ["t", "x_0", "x_1", "x_2", "q_norm"]
    assert len(rows) == len(traj.times) + 1
    assert float(rows[-1][0]) == traj.times[-1]
    meta = json.loads(trajectory_sidecar(traj))
    validate_schema(meta, "trajectory")
    assert meta["termination"] == HORIZON_REACHED


# --- invariance and equivariance -------------------------------------------------

def test_invariant_planes():
    sl2, sol, euc = (builtin_metric(n) for n in ("sl2", "sol", "euc"))
    assert subspace_invariance_residual(sl2, [(1, 0, 0), (0, 1, 0)]) == 0
    assert subspace_invariance_residual(sol, [(1, 0, 0), (0, 1, 0)]) == 0
    assert subspace_invariance_residual(euc, [(1, 0, 0), (0, 1, 0)]) == 0


def test_non_invariant_plane_euc():
    # probe f1 + e = (1, 0, 1): the formula gives (0*1 - 0, 1, 0) = (0, 1, 0), outside span(f1, e)
    euc = builtin_metric("euc")
    assert geodesic_field(euc, (1, 0, 1)) == (0, 1, 0)
    assert subspace_invariance_residual(euc, [(1, 0, 0), (0, 0, 1)]) > 0


def test_invariance_float_path():
    sol = builtin_metric("sol")
    assert subspace_invariance_residual(sol, [np.array([1.0, 0, 0]), np.array([1.0, 1.0, 0])]) < 1e-14
    # span(e1, h) is invariant too: F(x, 0, z) = (-xz, 0, z^2)
    assert subspace_invariance_residual(sol, [np.array([1.0, 0, 0]), np.array([0.0, 0, 1.0])]) < 1e-14
    # span(e2, h) is not: F(0, y, z) has e1 component y^2
    assert subspace_invariance_residual(sol, [np.array([0.0, 1, 0]), np.array([0.0, 0, 1.0])]) > 0.1


def test_dependent_span_rejected():
    with pytest.raises(InvalidInput):
        subspace_invariance_residual(builtin_metric("sol"), [(1, 0, 0), (2, 0, 0)])
    with pytest.raises(InvalidInput):
        projection_equivariance_residual(builtin_metric("sol"), (1, 0, 0), [(2, 0, 0), (0, 1, 0)])


def test_sigma_equivariance():
    assert projection_equivariance_residual(builtin_metric("sl2"), V0, [(1, 0, 0), (0, 1, 0)]) == 0
    assert projection_equivariance_residual(builtin_metric("sol"), (0, 0, 1), [(1, 0, 0), (0, 1, 0)]) == 0


def test_sol_sigma_direct(rng):
    ma = builtin_metric("sol")
    for _ in range(20):
        x, y, z = random_rational_vector(rng, 3)
        fv = geodesic_field(ma, (x, y, z))
        assert fv[2] == z * z
        assert geodesic_field(ma, (0, 0, z)) == (0, 0, z * z)


def test_projection_along_e_not_equivariant(rng):
    # oracle: second formulation A^-1 [A v, v] for the field, computed independently
    alg = load_builtin("sl2")
    a_inv = exact.inverse(SL2_A)

    def field(v):
        return exact.matvec(a_inv, bracket(alg, exact.matvec(SL2_A, v), v))

    v = random_rational_vector(rng, 3)
    sigma = lambda w: (w[0], 0, 0)  # noqa: E731  projection onto Re along span(h, f)
    lhs, rhs = sigma(field(v)), field(sigma(v))
    assert lhs != rhs
    res = projection_equivariance_residual(builtin_metric("sl2"), (1, 0, 0), [(0, 1, 0), (0, 0, 1)])
    assert res > 0
    assert projection_equivariance_residual(builtin_metric("sl2"), np.array([1.0, 0, 0]),
                                            [np.array([0.0, 1, 0]), np.array([0.0, 0, 1])]) > 0


def test_float_equivariance_sampling():
    res = projection_equivariance_residual(builtin_metric("sl2"), np.array(V0, float),
                                           [np.array([1.0, 0, 0]), np.array([0.0, 1, 0])])
    assert res < 1e-12


def test_killing_trace_reference():
    # the builtin sl2 metric is K.A; K itself is the Killing form
    k = np.array(killing_form(load_builtin("sl2")), float)
    assert np.array_equal(builtin_metric("sl2").q_array, k @ np.array(SL2_A, float))
