import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxstab import coeffs
from maxstab import models as M
from maxstab.coeffs import CoefficientTable, ChoquetValidationError, convert
from maxstab.core import TableError, simplex_grid

from conftest import TABLE1_PUBLISHED, table1_model


def _level(table, size):
    return table.values[(1 << size) - 1]


def test_table1_columns(table1):
    name, model = table1
    chi12, chi123, th12, th123 = TABLE1_PUBLISHED[name]
    chi, theta = model.chi, model.theta
    assert _level(chi, 2) == pytest.approx(chi12, abs=1e-12)
    assert _level(chi, 3) == pytest.approx(chi123, abs=1e-12)
    assert _level(theta, 2) == pytest.approx(th12, abs=1e-12)
    assert _level(theta, 3) == pytest.approx(th123, abs=1e-12)


def test_named_conversions_on_table1():
    c = coeffs.theta_to_chi(table1_model("C").theta)
    assert (_level(c, 2), _level(c, 3)) == pytest.approx((0.5, 0.4), abs=1e-12)
    t = coeffs.chi_to_theta(table1_model("B").chi)
    assert (_level(t, 2), _level(t, 3)) == pytest.approx((1.4, 1.5), abs=1e-12)
    theta_a = CoefficientTable.exchangeable(3, "theta", (1.0, 1.5, 1.8))
    tau = coeffs.theta_to_tau(theta_a)
    assert [_level(tau, k) for k in (1, 2, 3)] == pytest.approx([0.3, 0.2, 0.3], abs=1e-12)
    tau_d = table1_model("D").tau
    assert [_level(coeffs.tau_to_theta(tau_d), k) for k in (2, 3)] == pytest.approx([1.3, 1.6], abs=1e-12)
    assert [_level(coeffs.tau_to_chi(tau_d), k) for k in (2, 3)] == pytest.approx([0.7, 0.7], abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_extreme_tables(d):
    ones = CoefficientTable.exchangeable(d, "theta", [1.0] * d)
    np.testing.assert_allclose(coeffs.theta_to_chi(ones).values[1:], 1.0)
    tau = coeffs.theta_to_tau(ones).values
    assert tau[-1] == pytest.approx(1.0) and np.allclose(tau[1:-1], 0.0)
    sizes = CoefficientTable.exchangeable(d, "theta", list(range(1, d + 1)))
    chi = coeffs.theta_to_chi(sizes).values
    singles = [1 << i for i in range(d)]
    assert np.allclose(chi[singles], 1.0)
    assert np.allclose(np.delete(chi, [0] + singles), 0.0)
    tau_i = coeffs.theta_to_tau(sizes).values
    assert np.allclose(tau_i[singles], 1.0)
    assert np.allclose(np.delete(tau_i, [0] + singles), 0.0)
    assert np.allclose(coeffs.tau_to_chi(coeffs.theta_to_tau(sizes)).values, chi)
    # chi == 1 is full dependence again
    np.testing.assert_allclose(coeffs.chi_to_theta(CoefficientTable.exchangeable(d, "chi", [1.0] * d)).values[1:], 1.0)


@settings(max_examples=100)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_all_conversion_paths_commute(d, seed):
    tau = coeffs.random_choquet_tau(d, np.random.default_rng(seed))
    direct = {k: convert(tau, k) for k in coeffs.KINDS}
    for path in itertools.permutations(coeffs.KINDS):
        t = tau
        for k in path:
            t = convert(t, k)
        np.testing.assert_allclose(t.values, direct[path[-1]].values, atol=1e-12)
    for a, b in itertools.permutations(coeffs.KINDS, 2):
        np.testing.assert_allclose(convert(direct[a], b).values, direct[b].values, atol=1e-12)
    np.testing.assert_allclose(coeffs.theta_to_tau(coeffs.tau_to_theta(tau)).values, tau.values, atol=1e-12)


def test_validation_examples(table1):
    _, model = table1
    coeffs.validate_choquet(model.theta)
    coeffs.validate_choquet(CoefficientTable.exchangeable(3, "theta", (1.0, 2.0, 3.0)))
    bad = CoefficientTable.exchangeable(3, "theta", (1.0, 2.0, 2.0))
    # its spectral mass on the full set is 2 - 3*2 + 3*1 = -1
    assert coeffs.theta_to_tau(bad).values[7] == pytest.approx(-1.0)
    with pytest.raises(ChoquetValidationError) as err:
        coeffs.validate_choquet(bad)
    assert err.value.diagnostics


def test_validation_rejects_broken_margins():
    t = CoefficientTable.from_dict({"1": 1.1, "2": 1.0, "1,2": 1.5}, 2, "theta")
    with pytest.raises(TableError):
        coeffs.validate_choquet(t)


def test_table_parsing():
    t = CoefficientTable.from_dict({"1": 1, "2": 1, "{1, 2}": 1.5}, 2, "theta")
    assert t.values[3] == 1.5
    with pytest.raises(TableError):
        CoefficientTable.from_dict({"1": 1, "2": 1}, 2, "theta")
    assert CoefficientTable.from_dict(t.to_dict(), 2, "theta").allclose(t)


def test_bivariate_choquet_ell_closed_form():
    theta = 1.5
    tau = convert(CoefficientTable.exchangeable(2, "theta", (1.0, theta)), "tau")
    rng = np.random.default_rng(1)
    for x in rng.exponential(size=(50, 2)):
        expect = max(x[0] + (theta - 1) * x[1], (theta - 1) * x[0] + x[1])
        assert coeffs.choquet_ell(tau, x) == pytest.approx(expect, abs=1e-12)


def test_choquet_ell_at_indicators(table1):
    _, model = table1
    for b in range(1, 8):
        x = np.array([(b >> i) & 1 for i in range(3)], float)
        assert coeffs.choquet_ell(model.tau, x) == pytest.approx(model.theta.values[b], abs=1e-12)
    if table1[0] == "A":
        assert coeffs.choquet_ell(model.tau, [1, 1, 1]) == pytest.approx(1.8, abs=1e-12)


@settings(max_examples=60)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_spectral_and_layer_routes_agree(d, seed):
    rng = np.random.default_rng(seed)
    tau = coeffs.random_choquet_tau(d, rng)
    X = rng.exponential(size=(20, d)) * (rng.random((20, d)) > 0.2)
    a = coeffs.choquet_ell_spectral(tau, X)
    b = coeffs.choquet_ell_layers(convert(tau, "theta"), X)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_zonoid_halfspaces():
    hs = coeffs.choquet_zonoid_halfspaces(CoefficientTable.exchangeable(3, "theta", (1.0, 1.0, 1.0)))
    full = [off for normal, off in hs if normal.sum() == 3]
    assert full == [1.0]
    hs_cube = coeffs.choquet_zonoid_halfspaces(CoefficientTable.exchangeable(2, "theta", (1.0, 2.0)))
    assert {tuple(n): o for n, o in hs_cube}[(1.0, 1.0)] == 2.0
    verts = coeffs.choquet_polygon_vertices(CoefficientTable.exchangeable(2, "theta", (1.0, 1.5)))
    expect = {(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 1.0)}
    assert {tuple(map(float, v)) for v in verts} == expect


def test_associated_choquet_idempotent_and_independent():
    a = table1_model("A")
    assert coeffs.associated_choquet(a) == a
    ind = coeffs.associated_choquet(M.Independent(3))
    singles = [1, 2, 4]
    assert np.allclose(ind.tau.values[singles], 1.0)
    assert np.allclose(np.delete(ind.tau.values, [0] + singles), 0.0)


def test_associated_choquet_dominates():
    for model in (M.Dirichlet((30.0, 0.2)), M.HuslerReiss.bivariate(1.0), M.Dirichlet((0.5, 2.0))):
        ch = coeffs.associated_choquet(model)
        P = simplex_grid(2, 64).points
        ell = M.ell_batch(model, P)[0]
        star = coeffs.choquet_ell(ch.tau, P)
        assert np.all(ell <= star + 1e-9)


def test_associated_choquet_of_dirichlet_pentagon():
    model = M.Dirichlet((30.0, 0.2))
    ch = coeffs.associated_choquet(model)
    t12 = M.ell(model, [1, 1]).value
    assert ch.theta.values[3] == pytest.approx(t12, abs=1e-9)
    verts = {tuple(np.round(v, 9)) for v in coeffs.choquet_polygon_vertices(ch.theta)}
    assert (1.0, round(t12 - 1, 9)) in verts and (round(t12 - 1, 9), 1.0) in verts
