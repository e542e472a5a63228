"""Dense symmetric eigendecomposition by cyclic Jacobi rotations.

Each sweep visits every off-diagonal pair once. Pairs are scheduled in
round-robin (tournament) order, so each round holds n/2 disjoint pairs
whose rotations commute and can be applied as one vectorized update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionError

MAX_DENSE_N = 3000


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # column i pairs with eigenvalue i

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def _round_robin(n: int):
    """Yield (p, q) index arrays for the n-1 rounds of a tournament on n players (n even)."""
    players = np.arange(n)
    for _ in range(n - 1):
        top, bottom = players[: n // 2], players[n // 2:][::-1]
        yield np.minimum(top, bottom), np.maximum(top, bottom)
        players = np.concatenate([players[:1], players[-1:], players[1:-1]])


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues and eigenvectors of the symmetric matrix `a` (unsorted).

    Stops once the off-diagonal Frobenius norm drops below ``tol * ||a||_F``.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    n0 = a.shape[0]
    a = 0.5 * (a + a.T)
    n = n0 + (n0 % 2)
    if n != n0:
        # a decoupled zero row/column keeps the tournament size even
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(n)
    scale = np.linalg.norm(a)
    threshold = tol * max(scale, np.finfo(float).tiny)
    rounds = list(_round_robin(n)) if n > 1 else []
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= threshold:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            theta_sq = np.where(big, 1.0, theta * theta)
            t = np.where(
                big,
                0.5 / np.where(big, theta, 1.0),
                np.sign(theta) / (np.abs(theta) + np.sqrt(theta_sq + 1.0)),
            )
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- A J then J^T A, with J_pp = J_qq = c, J_pq = s, J_qp = -s
            ap, aq = a[:, p].copy(), a[:, q]
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :].copy(), a[q, :]
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    if n != n0:
        # the padded coordinate is an exact eigenvector; drop it
        pad_col = int(np.argmax(np.abs(v[n0, :])))
        keep = np.arange(n) != pad_col
        w, v = w[keep], v[:n0, keep]
    return w, v


def eigendecompose(op, method: str = "jacobi") -> EigenDecomposition:
    """Full eigendecomposition of a `SpectralOperator` (or a dense symmetric matrix).

    Eigenvalues come back ascending; each eigenvector is signed so that its
    largest-magnitude component is positive. ``method="lapack"`` swaps in
    ``numpy.linalg.eigh`` for the Jacobi sweeps.
    """
    dense = op.to_dense() if hasattr(op, "to_dense") else np.asarray(op, dtype=np.float64)
    n = dense.shape[0]
    if n > MAX_DENSE_N:
        raise CapacityError(f"dense eigendecomposition is limited to n <= {MAX_DENSE_N}, got {n}")
    if method == "jacobi":
        w, v = jacobi_eigh(dense)
    elif method == "lapack":
        w, v = np.linalg.eigh(0.5 * (dense + dense.T))
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    if n:
        pivot = v[np.argmax(np.abs(v), axis=0), np.arange(n)]
        v = v * np.where(pivot < 0, -1.0, 1.0)
    w.setflags(write=False)
    v.setflags(write=False)
    return EigenDecomposition(w, v)
