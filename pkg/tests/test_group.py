import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from ea_lab.errors import InvalidInput, InvalidRealization
from ea_lab.flow import Trajectory, field_function, integrate
from ea_lab.group import (builtin_realization, distance_to_one_parameter_group, realization_residual, realize,
                          reconstruct_group_curve)
from ea_lab.lie import load_builtin
from ea_lab.metric import builtin_metric

V0 = np.array([3 / 8, -1 / 2, 1.0])


@pytest.mark.parametrize("name", ["sl2", "sol", "euc", "sol_euc"])
def test_builtin_realizations_are_homomorphisms(name):
    assert realization_residual(load_builtin(name), builtin_realization(name)) == 0


def test_bad_realization_rejected():
    mats = builtin_realization("sl2")
    bad = [mats[1], mats[0], mats[2]]
    traj = integrate(builtin_metric("sl2"), np.array([1.0, 0, 0]), 1.0)
    with pytest.raises(InvalidRealization):
        reconstruct_group_curve(builtin_metric("sl2"), bad, traj)
    with pytest.raises(InvalidRealization):
        reconstruct_group_curve(builtin_metric("sl2"), mats[:2], traj)
    with pytest.raises(InvalidInput):
        builtin_realization("so3")


@pytest.mark.parametrize("name,v", [("sl2", (1.0, 0, 0)), ("sol", (1.0, 0, 0)), ("euc", (0, 2.0, 0))])
def test_constant_trajectory_gives_exponential(name, v):
    ma = builtin_metric(name)
    traj = integrate(ma, np.array(v), 3.0)
    assert np.all(traj.states == np.array(v))
    curve = reconstruct_group_curve(ma, builtin_realization(name), traj)
    gen = realize(builtin_realization(name), v)
    for t, g in zip(curve.times, curve.elements):
        assert np.allclose(g, expm(t * gen), atol=1e-12)


def test_sl2_nilpotent_closed_form():
    # realized e is nilpotent, so exp(tE) = I + tE
    ma = builtin_metric("sl2")
    curve = reconstruct_group_curve(ma, builtin_realization("sl2"), integrate(ma, np.array([1.0, 0, 0]), 2.0))
    assert np.allclose(curve.elements[-1], [[1, 2], [0, 1]], atol=1e-13)


def test_zero_trajectory_is_identity():
    ma = builtin_metric("sol")
    curve = reconstruct_group_curve(ma, builtin_realization("sol"), integrate(ma, np.zeros(3), 4.0))
    assert all(np.array_equal(g, np.eye(3)) for g in curve.elements)
    assert curve.roundtrip_residual == 0


def test_empty_trajectory_rejected():
    ma = builtin_metric("sol")
    empty = Trajectory(np.zeros(0), np.zeros((0, 3)), "HorizonReached", np.zeros(0))
    with pytest.raises(InvalidInput):
        reconstruct_group_curve(ma, builtin_realization("sol"), empty)


def test_radial_curve_on_one_parameter_group():
    ma = builtin_metric("sl2")
    mats = builtin_realization("sl2")
    traj = integrate(ma, 0.5 * V0, 1.0)
    curve = reconstruct_group_curve(ma, mats, traj)
    gen = realize(mats, V0)
    for g in curve.elements:
        assert distance_to_one_parameter_group(g, gen) < 1e-8
        assert abs(np.linalg.det(g) - 1) < 1e-10


def _ivp_oracle(ma, mats, x0, horizon):
    f = field_function(ma)
    n, size = len(x0), mats[0].shape[0]

    def rhs(_, y):
        x, g = y[:n], y[n:].reshape(size, size)
        return np.concatenate([f(x), (g @ realize(mats, x)).ravel()])

    y0 = np.concatenate([x0, np.eye(size).ravel()])
    sol = solve_ivp(rhs, (0, horizon), y0, method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[n:, -1].reshape(size, size)


@pytest.mark.parametrize("name", ["sl2", "sol", "euc"])
def test_matches_joint_ivp_oracle(name, rng):
    ma = builtin_metric(name)
    mats = builtin_realization(name)
    for _ in range(3):
        x0 = rng.uniform(-0.5, 0.5, 3)
        traj = integrate(ma, x0, 1.0, 1e-11)
        curve = reconstruct_group_curve(ma, mats, traj)
        assert np.allclose(curve.elements[-1], _ivp_oracle(ma, mats, x0, 1.0), atol=1e-8)
        assert curve.roundtrip_residual < 1e-4


def test_left_log_derivative_recovers_states(rng):
    # finite difference of g^-1 g' against the realized state at interior samples
    ma = builtin_metric("euc")
    mats = builtin_realization("euc")
    x0 = rng.uniform(-0.5, 0.5, 3)
    traj = integrate(ma, x0, 1.0, 1e-11)
    dense = Trajectory(np.linspace(0, 1, 2001), None, traj.termination, traj.energy)
    oracle = solve_ivp(lambda _, x: field_function(ma)(x), (0, 1), x0, t_eval=dense.times, rtol=1e-12, atol=1e-13)
    dense.states = oracle.y.T
    curve = reconstruct_group_curve(ma, mats, dense)
    h = dense.times[1] - dense.times[0]
    for i in range(100, 1900, 300):
        g, gp = curve.elements[i], (curve.elements[i + 1] - curve.elements[i - 1]) / (2 * h)
        assert np.allclose(np.linalg.solve(g, gp), realize(mats, dense.states[i]), atol=1e-5)
