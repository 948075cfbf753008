"""Spectral toolkit for the row-stochastic propagation matrix P = D^(-1) A.

Works on self-looped graphs.  Distributions follow the row convention: a
distribution is a row vector evolved as pi @ P, and the k-step propagation
seeded at node i is row i of P^k.  The decay rate reported as ``lambda2`` is
the largest non-unit eigenvalue modulus, computed per connected component on
the symmetric similar matrix D^(-1/2) A D^(-1/2) (same spectrum as P).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dense import DENSE_LIMIT, dense_eig_symmetric, dense_propagation_matrix
from .errors import CapabilityError, ConvergenceError, PropertyViolationError, ValidationError
from .graph import SparseGraph, connected_components, degrees, loop_weights, to_scipy

__all__ = [
    "PropagationMatrixView",
    "ConvergenceReport",
    "ComponentGap",
    "stationary_distribution",
    "second_eigenvalue",
    "component_second_eigenvalues",
    "convergence_bound",
    "verify_bound",
    "spectral_gap_report",
]


def _require_loops(g: SparseGraph) -> None:
    if not g.has_self_loops:
        raise ValidationError("operation requires a self-looped graph")


@dataclass
class PropagationMatrixView:
    """A self-looped graph read as the row-stochastic matrix D^(-1) A."""

    graph: SparseGraph

    def __post_init__(self):
        _require_loops(self.graph)

    def to_scipy(self) -> sp.csr_matrix:
        d = degrees(self.graph).values
        return sp.diags(1.0 / d) @ to_scipy(self.graph)

    def dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        return dense_propagation_matrix(self.graph, limit)


def stationary_distribution(g_looped: SparseGraph) -> np.ndarray:
    """Limit of a uniform start under repeated propagation.

    Per connected component the limit weights each node by its self-looped
    degree, scaled by the component's share of the uniform starting mass.
    The result is non-negative and sums to 1.
    """
    _require_loops(g_looped)
    d = degrees(g_looped).values
    comp = connected_components(g_looped)
    pi = np.zeros(g_looped.n)
    for c in range(comp.max() + 1):
        idx = np.flatnonzero(comp == c)
        mass = len(idx) / g_looped.n
        pi[idx] = mass * d[idx] / d[idx].sum()
    return pi


def component_second_eigenvalues(
    g_looped: SparseGraph,
    method: str = "dense",
    tol: float = 1e-10,
    max_iter: int = 20000,
    dense_limit: int = DENSE_LIMIT,
) -> tuple[list[float], bool]:
    """Per-component decay rate max(|lambda_2|, |lambda_n|) of P.

    Returns the list (component order matches :func:`connected_components`)
    plus a flag telling whether the graph is connected.
    """
    _require_loops(g_looped)
    if method not in ("dense", "power_deflate"):
        raise ValidationError(f"unknown eigenvalue method {method!r}")
    comp = connected_components(g_looped)
    d = degrees(g_looped).values
    a = to_scipy(g_looped)
    out: list[float] = []
    for c in range(comp.max() + 1):
        idx = np.flatnonzero(comp == c)
        if len(idx) == 1:
            out.append(0.0)
            continue
        scale = sp.diags(1.0 / np.sqrt(d[idx]))
        s_c = scale @ a[idx][:, idx] @ scale
        if method == "dense":
            if len(idx) > dense_limit:
                raise CapabilityError(
                    f"dense eigensolve refused: component size {len(idx)} exceeds {dense_limit}"
                )
            vals, _ = dense_eig_symmetric(s_c.toarray(), limit=dense_limit)
            out.append(float(max(abs(vals[1]), abs(vals[-1]))))
        else:
            out.append(_deflated_power_modulus(s_c, np.sqrt(d[idx]), tol, max_iter))
    return out, comp.max() == 0


def _deflated_power_modulus(
    s_c: sp.csr_matrix, top_vec: np.ndarray, tol: float, max_iter: int
) -> float:
    """Largest eigenvalue modulus of S after deflating the known top pair.

    The unit eigenvector of S on a connected component is proportional to
    sqrt(degree).  Each iteration applies S twice so a +/- mu eigenvalue pair
    cannot oscillate: S^2 has mu^2 as its dominant non-deflated eigenvalue.
    """
    v1 = top_vec / np.linalg.norm(top_vec)

    def step(x: np.ndarray) -> np.ndarray:
        y = s_c @ x
        return y - (v1 @ y) * v1

    rng = np.random.default_rng(12345)
    x = rng.standard_normal(len(v1))
    x -= (v1 @ x) * v1
    norm = np.linalg.norm(x)
    if norm == 0:  # cannot happen in practice; keep a deterministic fallback
        return 0.0
    x /= norm
    est = None
    delta = float("inf")
    for _ in range(max_iter):
        y = step(step(x))
        sq = np.linalg.norm(y)
        if sq < 1e-300:
            return 0.0
        new_est = float(np.sqrt(sq))
        if est is not None:
            delta = abs(new_est - est)
            if delta < tol * max(1.0, new_est):
                return new_est
        est = new_est
        x = y / sq
    raise ConvergenceError(
        f"deflated power iteration did not converge in {max_iter} iterations",
        residual=delta,
    )


def second_eigenvalue(
    g_looped: SparseGraph,
    method: str = "dense",
    tol: float = 1e-10,
    max_iter: int = 20000,
    dense_limit: int = DENSE_LIMIT,
) -> float:
    """Decay rate of P: the per-component value, maximized over components."""
    vals, _ = component_second_eigenvalues(g_looped, method, tol, max_iter, dense_limit)
    return max(vals) if vals else 0.0


def convergence_bound(g_looped: SparseGraph, node: int, k: int, lambda2: float) -> float:
    """sqrt((2m + n) / d_i) * lambda2^k with m counting non-loop edges."""
    _require_loops(g_looped)
    d = degrees(g_looped).values
    if not 0 <= node < g_looped.n:
        raise ValidationError(f"node {node} out of range")
    m = g_looped.num_nonloop_edges()
    return float(np.sqrt((2 * m + g_looped.n) / d[node]) * lambda2**k)


@dataclass
class ConvergenceReport:
    """Bound-vs-empirical convergence data for every node and step."""

    lambda2: float
    spectral_gap: float
    avg_degree: float
    n: int
    m: int
    d_tilde: np.ndarray
    bounds: np.ndarray  # (k_max+1, n)
    empirical: np.ndarray  # (k_max+1, n)
    worst_slack: float = field(default=float("inf"))

    @property
    def two_m_plus_n(self) -> int:
        return 2 * self.m + self.n

    def rows(self):
        """Yield (node, k, d_tilde, bound, empirical) tuples for serialization."""
        k_max = self.bounds.shape[0] - 1
        for node in range(self.n):
            for k in range(k_max + 1):
                yield node, k, self.d_tilde[node], self.bounds[k, node], self.empirical[k, node]


def verify_bound(
    g_looped: SparseGraph,
    k_max: int,
    dense_limit: int = DENSE_LIMIT,
    slack: float = 1e-12,
) -> ConvergenceReport:
    """Check the per-node convergence bound empirically on a connected graph.

    For every node i and k <= k_max, the distance from row i of P^k to the
    stationary distribution must stay below sqrt((2m+n)/d_i) * lambda2^k.
    A violation raises: the bound is a theorem, so violations mean a bug.
    """
    _require_loops(g_looped)
    if g_looped.n > dense_limit:
        raise CapabilityError(
            f"verify_bound refused: n={g_looped.n} exceeds dense limit {dense_limit}"
        )
    if k_max < 0:
        raise ValidationError("k_max must be non-negative")
    comp = connected_components(g_looped)
    if comp.max() != 0:
        raise ValidationError("verify_bound requires a connected graph")

    p = dense_propagation_matrix(g_looped, dense_limit)
    pi = stationary_distribution(g_looped)
    lam2 = second_eigenvalue(g_looped, "dense", dense_limit=dense_limit)
    d = degrees(g_looped).values
    m = g_looped.num_nonloop_edges()
    scale = np.sqrt((2 * m + g_looped.n) / d)

    bounds = np.empty((k_max + 1, g_looped.n))
    empirical = np.empty((k_max + 1, g_looped.n))
    worst = float("inf")
    pk = np.eye(g_looped.n)
    for k in range(k_max + 1):
        if k > 0:
            pk = pk @ p
        emp = np.linalg.norm(pk - pi[None, :], axis=1)
        bnd = scale * lam2**k
        bad = emp > bnd + slack
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise PropertyViolationError(
                f"convergence bound violated at node {i}, k={k}: "
                f"empirical {emp[i]:.3e} > bound {bnd[i]:.3e}"
            )
        bounds[k] = bnd
        empirical[k] = emp
        worst = min(worst, float((bnd - emp).min()))

    non_loop_deg = degrees(g_looped).values - loop_weights(g_looped)
    return ConvergenceReport(
        lambda2=lam2,
        spectral_gap=1.0 - lam2,
        avg_degree=float(non_loop_deg.mean()),
        n=g_looped.n,
        m=m,
        d_tilde=d,
        bounds=bounds,
        empirical=empirical,
        worst_slack=worst,
    )


@dataclass
class ComponentGap:
    component: int
    size: int
    gap: float
    avg_degree: float


def spectral_gap_report(
    g_looped: SparseGraph, method: str = "dense", dense_limit: int = DENSE_LIMIT
) -> list[ComponentGap]:
    """(1 - lambda2, average non-loop degree) per connected component.

    Report only; no asymptotic claim is asserted.
    """
    _require_loops(g_looped)
    lam2s, _ = component_second_eigenvalues(g_looped, method, dense_limit=dense_limit)
    comp = connected_components(g_looped)
    non_loop_deg = degrees(g_looped).values - loop_weights(g_looped)
    out = []
    for c, lam2 in enumerate(lam2s):
        idx = np.flatnonzero(comp == c)
        out.append(
            ComponentGap(
                component=c,
                size=len(idx),
                gap=1.0 - lam2,
                avg_degree=float(non_loop_deg[idx].mean()),
            )
        )
    return out
