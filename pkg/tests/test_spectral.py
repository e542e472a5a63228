import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chebfilter import poly
from chebfilter.eigen import eigendecompose
from chebfilter.errors import DimensionError, RecoveryError
from chebfilter.graph import Graph
from chebfilter.operators import NORMALIZED_LAPLACIAN, SCALED_LAPLACIAN, build_operator
from chebfilter.spectral import (SampledFilter, apply_cheb_filter, apply_exact_filter, build_ring,
                                 cheb_filter_oracle, chebnet2_coefficients, impulse_filter,
                                 recover_perfect_filter, sample_filter_response)

from conftest import random_graph


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 40), st.integers(0, 12), st.integers(0, 10_000))
def test_recurrence_matches_eigenbasis(n, K, seed):
    g = random_graph(n, 0.2, seed)
    op = build_operator(g, SCALED_LAPLACIAN)
    rng = np.random.default_rng(seed)
    coeffs = poly.FilterCoefficients("chebyshev", rng.standard_normal(K + 1))
    x = rng.standard_normal(n)
    eig = eigendecompose(op, method="lapack")
    assert np.abs(apply_cheb_filter(op, coeffs, x) - cheb_filter_oracle(eig, coeffs, x)).max() < 1e-8


def test_identity_filter():
    eig = eigendecompose(build_operator(build_ring(6), NORMALIZED_LAPLACIAN))
    x = np.arange(6.0)
    assert np.allclose(apply_exact_filter(eig, lambda lam: np.ones_like(lam), x), x)


def test_matrix_signal():
    op = build_operator(random_graph(10, 0.4, 3), SCALED_LAPLACIAN)
    c = poly.FilterCoefficients("chebyshev", [0.5, -1.0, 0.25])
    x = np.random.default_rng(0).standard_normal((10, 3))
    y = apply_cheb_filter(op, c, x)
    for j in range(3):
        assert np.allclose(y[:, j], apply_cheb_filter(op, c, x[:, j]))


def test_response_length_checked():
    eig = eigendecompose(build_operator(build_ring(5), NORMALIZED_LAPLACIAN))
    with pytest.raises(DimensionError):
        apply_exact_filter(eig, np.ones(4), np.ones(5))


def test_ring_impulses():
    eig = eigendecompose(build_operator(build_ring(12), NORMALIZED_LAPLACIAN))
    x = np.zeros(12)
    x[0] = 1.0
    low = apply_exact_filter(eig, impulse_filter(0.0), x)
    high = apply_exact_filter(eig, impulse_filter(2.0), x)
    band = apply_exact_filter(eig, impulse_filter(1.0), x)
    assert np.var(low) <= 1e-10
    assert np.allclose(low, 1 / 12)
    assert np.all(np.sign(high) == np.where(np.arange(12) % 2 == 0, 1, -1))
    big = band[np.abs(band) > 1e-9]
    assert big.size and (big > 0).any() and (big < 0).any()


def test_recovery_round_trip():
    g = random_graph(30, 0.2, 7)
    eig = eigendecompose(build_operator(g, NORMALIZED_LAPLACIAN))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(30)
    y = np.where(rng.random(30) < 0.5, 1.0, -1.0)
    filt = recover_perfect_filter(eig, x, y)
    assert np.abs(apply_exact_filter(eig, filt, x) - y).max() < 1e-6


def test_recovery_identity_when_signal_is_labels():
    eig = eigendecompose(build_operator(random_graph(12, 0.4, 9), NORMALIZED_LAPLACIAN))
    y = np.where(np.random.default_rng(2).random(12) < 0.5, 1.0, -1.0)
    assert np.abs(eig.eigenvectors.T @ y).min() > 1e-8
    assert np.allclose(recover_perfect_filter(eig, y, y).responses, 1.0)


def test_recovery_orthogonal_signal():
    eig = eigendecompose(build_operator(build_ring(6), NORMALIZED_LAPLACIAN))
    x = eig.eigenvectors[:, 0]  # orthogonal to every other eigenvector
    with pytest.raises(RecoveryError) as info:
        recover_perfect_filter(eig, x, np.ones(6))
    assert info.value.index == 1


def test_chebnet2_coefficients_interpolate():
    rng = np.random.default_rng(5)
    gamma = rng.random(8)
    c = chebnet2_coefficients(gamma)
    assert np.allclose(c(poly.cheb_nodes(7).nodes), gamma, atol=1e-12)


def test_sample_filter_response():
    s = sample_filter_response(poly.FilterCoefficients("chebyshev", [0, 1]), grid=5, domain="laplacian")
    assert isinstance(s, SampledFilter)
    assert np.allclose(s.lambdas, [0, 0.5, 1, 1.5, 2])
    assert np.allclose(s.responses, [-1, -0.5, 0, 0.5, 1])
