"""Applying spectral filters to graph signals.

`apply_cheb_filter` is the production path (K sparse products, no
eigendecomposition); `apply_exact_filter` is the dense eigenbasis route
used as an oracle and for the small demos.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .eigen import EigenDecomposition
from .errors import CapacityError, DimensionError, EvaluationError, RecoveryError
from .graph import Graph
from .operators import SpectralOperator
from .poly import FilterCoefficients, cheb_interp_matrix, evaluate, uniform_grid


@dataclass(frozen=True, eq=False)
class SampledFilter:
    lambdas: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64).ravel()
        resp = np.asarray(self.responses, dtype=np.float64).ravel()
        if lam.shape != resp.shape:
            raise DimensionError("lambdas and responses differ in length")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "responses", resp)


def _signal(x, n):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[0] != n:
        raise DimensionError(f"signal of shape {x.shape} does not match {n} nodes")
    if not np.all(np.isfinite(x)):
        raise EvaluationError("graph signal has non-finite entries")
    return x


def apply_cheb_filter(op: SpectralOperator, coeffs: FilterCoefficients, x) -> np.ndarray:
    """``sum_k w_k T_k(op) x`` via the three-term recurrence.

    `op` is normally the scaled Laplacian; any operator whose spectrum lies
    in [-1, 1] works. Columns of a matrix signal are filtered independently.
    """
    if coeffs.basis != "chebyshev":
        raise ValueError(f"expected Chebyshev coefficients, got {coeffs.basis}")
    x = _signal(x, op.n)
    w = coeffs.weights
    t_prev, t = x, None
    y = w[0] * x
    if coeffs.order >= 1:
        t = op.matvec(x)
        y = y + w[1] * t
    for k in range(2, coeffs.order + 1):
        t_prev, t = t, 2.0 * op.matvec(t) - t_prev
        y = y + w[k] * t
    return y


def _responses(eig: EigenDecomposition, h) -> np.ndarray:
    if isinstance(h, SampledFilter):
        resp = h.responses
    elif callable(h):
        resp = np.asarray(h(eig.eigenvalues), dtype=np.float64)
        resp = np.broadcast_to(resp, eig.eigenvalues.shape)
    else:
        resp = np.asarray(h, dtype=np.float64)
    if resp.shape != eig.eigenvalues.shape:
        raise DimensionError(f"need {eig.n} responses, got {resp.shape}")
    if not np.all(np.isfinite(resp)):
        raise EvaluationError("filter response is not finite at some eigenvalue")
    return resp


def apply_exact_filter(eig: EigenDecomposition, h, x) -> np.ndarray:
    """``U diag(h(lambda_i)) U^T x``.

    `h` is either a function of the eigenvalue or per-eigenpair responses
    (an array or a `SampledFilter` aligned with ``eig.eigenvalues``). The
    latter can assign different gains inside a repeated eigenvalue, which
    a function of lambda cannot.
    """
    x = _signal(x, eig.n)
    resp = _responses(eig, h)
    u = eig.eigenvectors
    coef = u.T @ x
    coef = resp * coef if coef.ndim == 1 else resp[:, None] * coef
    return u @ coef


def cheb_filter_oracle(eig: EigenDecomposition, coeffs: FilterCoefficients, x) -> np.ndarray:
    """Eigenbasis evaluation of a polynomial filter; `eig` must be of the same operator."""
    return apply_exact_filter(eig, lambda lam: evaluate(coeffs, np.clip(lam, -1.0, 1.0)), x)


def impulse_filter(target: float, tol: float = 1e-6) -> Callable:
    """Indicator of ``|lambda - target| <= tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")

    def h(lam):
        return (np.abs(np.asarray(lam, dtype=np.float64) - target) <= tol).astype(np.float64)

    return h


def recover_perfect_filter(eig: EigenDecomposition, x, y, eps: float = 1e-8) -> SampledFilter:
    """Per-eigenpair gains mapping signal `x` onto the +-1 label vector `y`.

    Gain i is ``(U^T y)_i / (U^T x)_i``; the construction needs every
    projection of `x` to be bounded away from zero.
    """
    x = _signal(x, eig.n)
    y = _signal(y, eig.n)
    if x.ndim != 1 or y.ndim != 1:
        raise DimensionError("recovery works on single-channel signals")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be +1 or -1")
    u = eig.eigenvectors
    px, py = u.T @ x, u.T @ y
    small = np.flatnonzero(np.abs(px) <= eps)
    if small.size:
        i = int(small[0])
        raise RecoveryError(i, float(px[i]), eps)
    return SampledFilter(eig.eigenvalues.copy(), py / px)


def build_ring(n: int) -> Graph:
    if n < 3:
        raise CapacityError(f"a ring needs at least 3 nodes, got {n}")
    i = np.arange(n)
    return Graph.from_edges(n, np.stack([i, (i + 1) % n], axis=1))


def chebnet2_coefficients(gamma, halve_first: bool = True) -> FilterCoefficients:
    """Chebyshev weights implied by node values `gamma` (already non-negative)."""
    gamma = np.asarray(gamma, dtype=np.float64).ravel()
    K = len(gamma) - 1
    return FilterCoefficients("chebyshev", cheb_interp_matrix(K, halve_first) @ gamma)


def sample_filter_response(filt, grid: int = 101, domain: str = "scaled") -> SampledFilter:
    """Sample a polynomial filter on a uniform grid.

    `filt` is `FilterCoefficients` or a callable on [-1, 1]. With
    ``domain="laplacian"`` the lambdas are reported as ``x + 1`` (the
    normalized-Laplacian eigenvalue when lambda_max = 2).
    """
    x = uniform_grid(grid)
    resp = evaluate(filt, x) if isinstance(filt, FilterCoefficients) else filt(x)
    resp = np.broadcast_to(np.asarray(resp, dtype=np.float64), x.shape)
    if domain == "scaled":
        lam = x
    elif domain == "laplacian":
        lam = x + 1.0
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return SampledFilter(lam, resp)
