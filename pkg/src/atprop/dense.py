"""Dense reference implementations for small graphs.

Everything here materializes full n-by-n matrices and exists to cross-check
the sparse production paths.  A hard node-count limit keeps these routines
from being pointed at anything large.
"""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError, ValidationError
from .graph import SparseGraph, degrees

__all__ = [
    "DENSE_LIMIT",
    "dense_adjacency",
    "dense_operator",
    "dense_propagation_matrix",
    "dense_propagate",
    "dense_eig_symmetric",
]

DENSE_LIMIT = 2000


def _check_limit(n: int, limit: int) -> None:
    if n > limit:
        raise CapabilityError(f"dense routine refused: n={n} exceeds limit {limit}")


def dense_adjacency(g: SparseGraph, limit: int = DENSE_LIMIT) -> np.ndarray:
    _check_limit(g.n, limit)
    a = np.zeros((g.n, g.n))
    rows = g._row_ids()
    a[rows, g.col_indices] = g.weights_view()
    return a


def dense_operator(g_looped: SparseGraph, r, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Materialize M[u, v] = d_u^(r_u - 1) * A[u, v] * d_v^(-r_v).

    ``g_looped`` must already carry self-loops so every degree is positive;
    ``r`` may be a scalar or a length-n vector.
    """
    _check_limit(g_looped.n, limit)
    d = degrees(g_looped).values
    if np.any(d <= 0):
        raise ValidationError("degenerate degree: every node needs positive weighted degree")
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (g_looped.n,))
    a = dense_adjacency(g_looped, limit)
    left = np.power(d, r - 1.0)
    right = np.power(d, -r)
    return (left[:, None] * a) * right[None, :]


def dense_propagation_matrix(g_looped: SparseGraph, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Row-stochastic P = D^(-1) A of a self-looped graph."""
    return dense_operator(g_looped, 0.0, limit)


def dense_propagate(m: np.ndarray, x: np.ndarray, weights) -> np.ndarray:
    """Sum of w_i * M^i X by repeated multiplication."""
    m = np.asarray(m, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("operator must be square")
    if x.shape[0] != m.shape[0]:
        raise ValidationError("row count of X must match the operator")
    weights = np.asarray(weights, dtype=np.float64)
    acc = np.zeros_like(x, dtype=np.float64)
    cur = x.astype(np.float64)
    for i, w in enumerate(weights):
        if i > 0:
            cur = m @ cur
        acc = acc + w * cur
    return acc


def dense_eig_symmetric(s: np.ndarray, limit: int = DENSE_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.

    Returns ``(values, vectors)`` with orthonormal eigenvectors in columns,
    column j matching values[j].
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError("input must be square")
    _check_limit(s.shape[0], limit)
    if not np.allclose(s, s.T, rtol=0, atol=1e-10):
        raise ValidationError("input must be symmetric")
    vals, vecs = np.linalg.eigh(s)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]
