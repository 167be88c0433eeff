import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BUILTINS, random_rational_vector, rational_vectors, rationals
from ea_lab import exact
from ea_lab.errors import DegenerateForm, InvalidInput, NotFound
from ea_lab.flow import geodesic_field
from ea_lab.lie import bracket, from_brackets, killing_form, load_builtin
from ea_lab.metric import (BilinearForm, MetricAlgebra, adstar_matrix, biinvariance_residual, builtin_form,
                           builtin_metric, form_from_dict, form_to_dict, killing_metric, load_metric,
                           self_adjoint_factor, signature, SL2_A)
from ea_lab.schemas import load_schema

F = Fraction
A = [[1, 1, 0], [0, 1, 1], [0, 0, 1]]


def eig_inertia(m):
    w = np.linalg.eigvalsh(np.array(m, float))
    return int((w > 1e-9).sum()), int((w < -1e-9).sum())


def test_sl2_metric_signature_against_eigenvalues():
    k = np.array(killing_form(load_builtin("sl2")), float)
    q = k @ np.array(A, float)
    assert signature(builtin_form("sl2")) == eig_inertia(q) == (2, 1)


@pytest.mark.parametrize("name", ["sol", "euc"])
def test_lorentz_signatures(name):
    assert signature(builtin_form(name)) == eig_inertia(builtin_form(name).matrix) == (2, 1)


def test_product_signature_raw_inertia():
    pos, neg = signature(builtin_form("sol_euc"))
    # the product form has 4 of one sign and 2 of the other; raw counts are reported
    assert sorted((pos, neg)) == [2, 4]
    assert (pos, neg) == eig_inertia(builtin_form("sol_euc").matrix) == (4, 2)


def test_identity_signature_and_degenerate():
    assert signature(BilinearForm(exact.identity(5))) == (5, 0)
    with pytest.raises(DegenerateForm):
        signature(BilinearForm([[1, 0], [0, 0]]))
    with pytest.raises(DegenerateForm):
        signature(BilinearForm(np.array([[1.0, 0], [0, 1e-14]])))
    with pytest.raises(InvalidInput):
        BilinearForm([[1, 2], [3, 1]])


@st.composite
def invertible_rational(draw, n):
    """Unit lower triangular times upper triangular with nonzero diagonal."""
    low = [[F(int(i == j)) if j >= i else draw(rationals(5, 3)) for j in range(n)] for i in range(n)]
    up = [[draw(rationals(5, 3).filter(bool)) if i == j else (draw(rationals(5, 3)) if j > i else F(0))
           for j in range(n)] for i in range(n)]
    return exact.matmul(exact.matrix(low), exact.matrix(up))


@given(st.sampled_from(BUILTINS[:3]), invertible_rational(3))
@settings(max_examples=50, deadline=None)
def test_signature_congruence_invariant(name, s):
    q = builtin_form(name).matrix
    cong = exact.matmul(exact.matmul(exact.transpose(s), q), s)
    assert signature(BilinearForm(cong)) == signature(builtin_form(name))
    assert signature(BilinearForm(np.array(cong, float))) == signature(builtin_form(name))


def test_displayed_adstar_matrices():
    sol = builtin_metric("sol")
    assert adstar_matrix(sol, sol.algebra.basis_vector("e2")) == exact.matrix([[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    assert adstar_matrix(sol, sol.algebra.basis_vector("h")) == exact.matrix([[0, 0, 0], [0, -1, 0], [0, 0, 1]])
    assert adstar_matrix(sol, sol.algebra.basis_vector("e1")) == exact.matrix([[0, 0, -1], [0, 0, 0], [0, 0, 0]])
    euc = builtin_metric("euc")
    assert adstar_matrix(euc, euc.algebra.basis_vector("e")) == exact.matrix([[0, 0, 0], [0, 0, 1], [0, -1, 0]])


@pytest.mark.parametrize("name", BUILTINS)
def test_adjoint_identity_exact(name):
    ma = builtin_metric(name)
    alg = ma.algebra
    basis = [alg.basis_vector(i) for i in range(alg.dim)]
    for i, x in enumerate(basis):
        m = ma.adstar_basis(i)
        for u in basis:
            for w in basis:
                assert ma.q(exact.matvec(m, u), w) == ma.q(u, bracket(alg, x, w))


@given(rational_vectors(3), rational_vectors(3), rationals(), st.sampled_from(["sl2", "sol", "euc"]))
@settings(max_examples=40, deadline=None)
def test_adstar_linear(x, y, a, name):
    ma = builtin_metric(name)
    lhs = adstar_matrix(ma, tuple(a * xi + yi for xi, yi in zip(x, y)))
    mx, my = adstar_matrix(ma, x), adstar_matrix(ma, y)
    assert lhs == tuple(tuple(a * p + q for p, q in zip(r1, r2)) for r1, r2 in zip(mx, my))


def test_adstar_float_path(rng):
    ma = builtin_metric("sl2")
    x = rng.standard_normal(3)
    exact_m = np.array(adstar_matrix(ma, tuple(F(v) for v in x)), float)
    assert np.allclose(adstar_matrix(ma, x), exact_m, atol=1e-13)
    fq = MetricAlgebra(ma.algebra, BilinearForm(np.array(ma.form.matrix, float)))
    assert np.allclose(adstar_matrix(fq, x), exact_m, atol=1e-12)


def test_biinvariance():
    assert biinvariance_residual(killing_metric(load_builtin("sl2"))) == 0
    assert biinvariance_residual(builtin_metric("sol")) > 0
    abelian = from_brackets(("a", "b", "c"), {})
    assert biinvariance_residual(MetricAlgebra(abelian, BilinearForm([[0, 0, 1], [0, 1, 0], [1, 0, 0]]))) == 0


def test_self_adjoint_factor():
    k = BilinearForm(killing_form(load_builtin("sl2")))
    assert self_adjoint_factor(k, builtin_form("sl2")) == SL2_A == exact.matrix(A)
    assert self_adjoint_factor(k, k) == exact.identity(3)
    with pytest.raises(DegenerateForm):
        self_adjoint_factor(BilinearForm(exact.zeros(3)), k)


def test_geo2_matches_geo1(rng):
    # A^-1 [A x, x] against ad*_x x, exact on random rational points
    alg = load_builtin("sl2")
    ma = builtin_metric("sl2")
    a_inv = exact.inverse(SL2_A)
    for _ in range(50):
        x = random_rational_vector(rng, 3)
        geo2 = exact.matvec(a_inv, bracket(alg, exact.matvec(SL2_A, x), x))
        assert geo2 == geodesic_field(ma, x)


def test_metric_requires_nondegenerate_and_matching_dim():
    alg = load_builtin("sol")
    with pytest.raises(DegenerateForm):
        MetricAlgebra(alg, BilinearForm([[1, 0, 0], [0, 0, 0], [0, 0, 1]]))
    with pytest.raises(InvalidInput):
        MetricAlgebra(alg, BilinearForm(exact.identity(2)))


def test_metric_json(tmp_path):
    import jsonschema
    schema = load_schema("metric")
    for name in BUILTINS:
        d = form_to_dict(builtin_form(name))
        jsonschema.validate(d, schema)
        assert form_from_dict(d, len(builtin_form(name).matrix)).matrix == builtin_form(name).matrix
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"entries": [{"i": 0, "j": 0, "value": "1"}, {"i": 1, "j": 1, "value": "2"},
                                            {"i": 2, "j": 2, "value": "-1/3"}]}))
    ma = load_metric(load_builtin("sol"), str(path))
    assert signature(ma.form) == (2, 1)
    assert load_metric(load_builtin("sl2"), "killing").form.matrix == killing_form(load_builtin("sl2"))
    with pytest.raises(NotFound):
        load_metric(load_builtin("sol"), str(tmp_path / "none.json"))
    path.write_text('{"entries": [{"i": 0, "j": 1, "value": 0.5}]}')
    with pytest.raises(InvalidInput, match="entries\\[0\\]"):
        load_metric(load_builtin("sol"), str(path))
    path.write_text('{"entries": [\n{"i": 0 "j": 1}]}')
    with pytest.raises(InvalidInput, match="line 2, column"):
        load_metric(load_builtin("sol"), str(path))
