"""Polynomial bases on [-1, 1] and the interpolation schemes built on them.

All functions here work on the reference interval; callers rescale
spectra (e.g. ``x = lambda - 1`` for a normalized Laplacian with
``lambda_max = 2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ConditioningError,
    DecayRateUndefined,
    DimensionError,
    DomainError,
    EvaluationError,
    NodeError,
)

BASES = ("chebyshev", "monomial", "bernstein")
_DOMAIN_SLACK = 1e-12
MAX_VANDERMONDE_ORDER = 30


@dataclass(frozen=True, eq=False)
class FilterCoefficients:
    """A polynomial ``sum_k w_k B_k(x)`` in one of the supported bases."""

    basis: str
    weights: np.ndarray

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        w = np.array(self.weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise DimensionError("a filter needs at least one weight")
        if not np.all(np.isfinite(w)):
            raise EvaluationError("filter weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def order(self) -> int:
        return len(self.weights) - 1

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True, eq=False)
class ChebyshevNodes:
    order: int
    nodes: np.ndarray


def _check_domain(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1.0 + _DOMAIN_SLACK):
        raise DomainError("argument outside [-1, 1]")
    return x


def cheb_T(k: int, x):
    """Chebyshev polynomial of the first kind by the three-term recurrence."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    x = _check_domain(x)
    t_prev, t = np.ones_like(x), x.copy()
    if k == 0:
        return t_prev if t_prev.ndim else float(t_prev)
    for _ in range(k - 1):
        t_prev, t = t, 2.0 * x * t - t_prev
    return t if t.ndim else float(t)


def cheb_vander(x, K: int) -> np.ndarray:
    """Matrix ``V[i, k] = T_k(x_i)`` for k = 0..K."""
    x = _check_domain(np.atleast_1d(x))
    v = np.empty((len(x), K + 1))
    v[:, 0] = 1.0
    if K >= 1:
        v[:, 1] = x
    for k in range(2, K + 1):
        v[:, k] = 2.0 * x * v[:, k - 1] - v[:, k - 2]
    return v


def cheb_nodes(K: int) -> ChebyshevNodes:
    """The K+1 zeros of T_{K+1}, in decreasing order."""
    if K < 0:
        raise ValueError("order must be non-negative")
    j = np.arange(K + 1)
    nodes = np.cos((j + 0.5) * np.pi / (K + 1))
    nodes.setflags(write=False)
    return ChebyshevNodes(K, nodes)


def equispaced_nodes(K: int) -> np.ndarray:
    if K == 0:
        return np.zeros(1)
    return np.linspace(-1.0, 1.0, K + 1)


def cheb_interp_matrix(K: int, halve_first: bool = True) -> np.ndarray:
    """Map from values at the Chebyshev nodes to Chebyshev-series weights.

    ``M[k, j] = 2 / (K+1) * T_k(x_j)``, with row 0 halved when
    `halve_first` is set so that the series reproduces the node values.
    """
    x = cheb_nodes(K).nodes
    m = (2.0 / (K + 1)) * cheb_vander(x, K).T
    if halve_first:
        m[0] *= 0.5
    return m


def _sample(h, x):
    try:
        vals = np.asarray(h(x), dtype=np.float64)
    except (TypeError, ValueError):
        vals = np.array([float(h(xi)) for xi in x])
    vals = np.broadcast_to(vals, np.shape(x)).astype(np.float64)
    if not np.all(np.isfinite(vals)):
        bad = np.asarray(x)[~np.isfinite(vals)][0]
        raise EvaluationError(f"function is not finite at x={bad!r}")
    return vals


def cheb_interpolate(h: Callable, K: int) -> FilterCoefficients:
    """Chebyshev interpolant of `h` at the K+1 Chebyshev nodes.

    >>> cheb_interpolate(lambda x: x, 3).weights.round(12) + 0.0
    array([0., 1., 0., 0.])
    """
    values = _sample(h, cheb_nodes(K).nodes)
    return FilterCoefficients("chebyshev", cheb_interp_matrix(K) @ values)


def eval_cheb_series(coeffs: FilterCoefficients, x):
    """Clenshaw summation of ``sum_k w_k T_k(x)``."""
    x = _check_domain(x)
    w = coeffs.weights
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for wk in w[:0:-1]:
        b1, b2 = 2.0 * x * b1 - b2 + wk, b1
    out = x * b1 - b2 + w[0]
    return out if out.ndim else float(out)


def eval_monomial(coeffs: FilterCoefficients, x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for a in coeffs.weights[::-1]:
        out = out * x + a
    return out if out.ndim else float(out)


def bernstein_basis(K: int, x) -> np.ndarray:
    """``B[i, k] = C(K, k) ((1+x)/2)^k ((1-x)/2)^(K-k)``."""
    x = _check_domain(np.atleast_1d(x))
    u, v = (1.0 + x) / 2.0, (1.0 - x) / 2.0
    k = np.arange(K + 1)
    binom = np.array([math.comb(K, i) for i in k], dtype=np.float64)
    return binom * u[:, None] ** k * v[:, None] ** (K - k)


def eval_bernstein(coeffs: FilterCoefficients, x):
    scalar = np.ndim(x) == 0
    out = bernstein_basis(coeffs.order, x) @ coeffs.weights
    return float(out[0]) if scalar else out


def evaluate(coeffs: FilterCoefficients, x):
    if coeffs.basis == "chebyshev":
        return eval_cheb_series(coeffs, x)
    if coeffs.basis == "monomial":
        return eval_monomial(coeffs, x)
    return eval_bernstein(coeffs, x)


def _distinct_nodes(nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=np.float64).ravel()
    if nodes.size == 0:
        raise NodeError("at least one node is required")
    srt = np.sort(nodes)
    if np.any(np.diff(srt) == 0):
        raise NodeError("interpolation nodes must be pairwise distinct")
    return nodes


def barycentric_weights(nodes) -> np.ndarray:
    nodes = _distinct_nodes(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    # product of many small differences under/overflows at high order; sum logs instead
    sign = np.prod(np.sign(diff), axis=1)
    logmag = np.sum(np.log(np.abs(diff)), axis=1)
    return sign * np.exp(-(logmag - logmag.max()))


def lagrange_interpolate(h: Callable, nodes, x):
    """Value at `x` of the polynomial interpolating `h` at `nodes`.

    Uses the second (true) barycentric formula; points that coincide with a
    node return the sampled value exactly.
    """
    nodes = _distinct_nodes(nodes)
    fvals = _sample(h, nodes)
    return lagrange_from_values(nodes, fvals, x)


def lagrange_from_values(nodes, values, x):
    nodes = _distinct_nodes(nodes)
    values = np.asarray(values, dtype=np.float64)
    w = barycentric_weights(nodes)
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    diff = xa[:, None] - nodes[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = w / diff
        out = (terms @ values) / terms.sum(axis=1)
    hit = exact.any(axis=1)
    if hit.any():
        out[hit] = values[np.argmax(exact[hit], axis=1)]
    return out if np.ndim(x) else float(out[0])


def solve_partial_pivot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = a.shape[0]
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if a[piv, col] == 0.0:
            raise ConditioningError("singular system")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= factors[:, None] * a[col, col:]
        b[col + 1:] -= factors * b[col]
    x = np.empty(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


def vandermonde_interpolate(h: Callable, nodes) -> FilterCoefficients:
    """Monomial coefficients of the interpolant, from the Vandermonde system.

    Refuses more than 31 nodes: the system's condition number grows
    exponentially with the order.
    """
    nodes = _distinct_nodes(nodes)
    K = len(nodes) - 1
    if K > MAX_VANDERMONDE_ORDER:
        raise ConditioningError(
            f"Vandermonde interpolation is capped at order {MAX_VANDERMONDE_ORDER}, got {K}"
        )
    vander = nodes[:, None] ** np.arange(K + 1)
    return FilterCoefficients("monomial", solve_partial_pivot(vander, _sample(h, nodes)))


def bernstein_approximate(h: Callable, K: int) -> FilterCoefficients:
    """Bernstein polynomial of `h`: weights are samples at ``-1 + 2k/K``."""
    if K < 1:
        raise ValueError("Bernstein approximation needs K >= 1")
    return FilterCoefficients("bernstein", _sample(h, -1.0 + 2.0 * np.arange(K + 1) / K))


def monic_nodal(nodes, x):
    """``prod_j (x - x_j)``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.ones_like(x)
    for xj in np.asarray(nodes, dtype=np.float64):
        out = out * (x - xj)
    return out


def uniform_grid(grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    return np.linspace(-1.0, 1.0, grid_size)


def max_grid_error(f: Callable, approx: Callable, grid_size: int = 1001) -> float:
    """Largest ``|f - approx|`` over a uniform grid on [-1, 1]."""
    x = uniform_grid(grid_size)
    return float(np.max(np.abs(_sample(f, x) - _sample(approx, x))))


def coefficient_decay_rate(coeffs: FilterCoefficients, floor: float = 1e-14) -> float:
    """Least-squares slope of ``log|w_k|`` against ``log k`` for k >= 2.

    Coefficients below `floor` in magnitude are treated as exact zeros and
    skipped. More negative means faster decay.
    """
    w = np.abs(coeffs.weights)
    if coeffs.order < 8:
        raise DecayRateUndefined(f"need order >= 8, got {coeffs.order}")
    k = np.arange(len(w))
    keep = (k >= 2) & (w >= floor)
    if keep.sum() < 5:
        raise DecayRateUndefined(f"only {int(keep.sum())} tail coefficients above {floor:g}")
    slope, _ = np.polyfit(np.log(k[keep]), np.log(w[keep]), 1)
    return float(slope)


# -- test functions ---------------------------------------------------------

def runge(x):
    x = np.asarray(x, dtype=np.float64)
    return 1.0 / (1.0 + 25.0 * x * x)
