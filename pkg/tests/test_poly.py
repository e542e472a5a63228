import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import chebyshev as npcheb

from chebfilter import poly
from chebfilter.errors import (ConditioningError, DecayRateUndefined, DomainError, EvaluationError,
                               NodeError)


def test_recurrence_matches_trig_form():
    x = np.linspace(-1, 1, 201)
    for k in range(51):
        assert np.abs(poly.cheb_T(k, x) - np.cos(k * np.arccos(x))).max() <= 1e-10


def test_cheb_T_domain():
    with pytest.raises(DomainError):
        poly.cheb_T(3, 1.1)


def test_vander_columns():
    x = np.linspace(-1, 1, 7)
    v = poly.cheb_vander(x, 5)
    assert np.allclose(v, npcheb.chebvander(x, 5))


def test_nodes_are_roots():
    for K in range(41):
        nodes = poly.cheb_nodes(K).nodes
        assert len(nodes) == K + 1
        assert np.abs(poly.cheb_T(K + 1, nodes)).max() <= 1e-9


def test_monic_nodal_norm():
    grid = np.linspace(-1, 1, 10001)
    for K in (2, 4, 8):
        # the nodal polynomial has K+1 roots, leading coefficient 2^-K
        norm = np.abs(poly.monic_nodal(poly.cheb_nodes(K).nodes, grid)).max()
        assert norm == pytest.approx(2.0 ** -K, abs=1e-6)
        equi = np.abs(poly.monic_nodal(poly.equispaced_nodes(K), grid)).max()
        assert equi >= norm - 1e-12


def test_interpolation_matches_numpy_chebfit():
    h = lambda x: np.exp(x) * np.sin(3 * x)
    for K in (0, 1, 5, 12):
        nodes = poly.cheb_nodes(K).nodes
        ref = npcheb.chebfit(nodes, h(nodes), K)
        assert np.allclose(poly.cheb_interpolate(h, K).weights, ref, atol=1e-12)


def test_unhalved_first_coefficient():
    m = poly.cheb_interp_matrix(4, halve_first=False)
    assert np.allclose(m[0], 2 * poly.cheb_interp_matrix(4)[0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_polynomials_reproduced_exactly(coeffs):
    p = poly.FilterCoefficients("monomial", coeffs)
    K = len(coeffs) - 1
    x = np.linspace(-1, 1, 101)
    scale = max(1.0, np.abs(coeffs).sum())
    assert np.abs(poly.cheb_interpolate(p, K)(x) - p(x)).max() <= 1e-11 * scale
    if K >= 1:
        lag = poly.lagrange_interpolate(p, poly.equispaced_nodes(K), x)
        assert np.abs(lag - p(x)).max() <= 1e-9 * scale


def test_clenshaw_matches_numpy():
    w = np.random.default_rng(0).standard_normal(9)
    x = np.linspace(-1, 1, 33)
    assert np.allclose(poly.eval_cheb_series(poly.FilterCoefficients("chebyshev", w), x),
                       npcheb.chebval(x, w), atol=1e-13)


def test_bernstein_partition_of_unity():
    x = np.linspace(-1, 1, 17)
    assert np.allclose(poly.bernstein_basis(7, x).sum(axis=1), 1.0)


def test_bernstein_reproduces_linear():
    f = lambda x: 0.5 * x + 2.0
    approx = poly.bernstein_approximate(f, 6)
    assert poly.max_grid_error(f, approx) < 1e-12


def test_lagrange_hits_nodes_exactly():
    nodes = poly.equispaced_nodes(6)
    vals = np.sin(nodes)
    assert np.array_equal(poly.lagrange_from_values(nodes, vals, nodes), vals)


def test_duplicate_nodes():
    with pytest.raises(NodeError):
        poly.barycentric_weights([0.0, 0.5, 0.5])


def test_vandermonde_matches_lagrange():
    nodes = poly.equispaced_nodes(10)
    v = poly.vandermonde_interpolate(poly.runge, nodes)
    x = np.linspace(-1, 1, 201)
    assert np.allclose(v(x), poly.lagrange_interpolate(poly.runge, nodes, x), atol=1e-6)
    with pytest.raises(ConditioningError):
        poly.vandermonde_interpolate(poly.runge, poly.equispaced_nodes(31))


def test_partial_pivot_solver():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((6, 6))
    b = rng.standard_normal(6)
    assert np.allclose(poly.solve_partial_pivot(a, b), np.linalg.solve(a, b))


def test_runge_orderings():
    err = lambda approx: poly.max_grid_error(poly.runge, approx)
    lag = {K: err(lambda x, K=K: poly.lagrange_interpolate(poly.runge, poly.equispaced_nodes(K), x))
           for K in (10, 20)}
    cheb = {K: err(poly.cheb_interpolate(poly.runge, K)) for K in (10, 20)}
    bern = err(poly.bernstein_approximate(poly.runge, 20))
    assert lag[20] > lag[10]
    assert cheb[20] < cheb[10] < 0.2
    assert cheb[20] < bern


def test_decay_rate():
    c = poly.cheb_interpolate(poly.runge, 30)
    assert poly.coefficient_decay_rate(c) < -1
    with pytest.raises(DecayRateUndefined):
        poly.coefficient_decay_rate(poly.cheb_interpolate(poly.runge, 4))


def test_constant_exact():
    f = lambda x: np.full(np.shape(x), 3.0)
    assert poly.max_grid_error(f, poly.cheb_interpolate(f, 5)) <= 1e-12


def test_non_finite_function():
    with pytest.raises(EvaluationError):
        poly.cheb_interpolate(lambda x: np.full(np.shape(x), np.nan), 3)
