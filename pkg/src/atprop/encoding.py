"""Weight-free local-context encodings of per-node propagation coefficients.

Three structural signals are computed on the corrected graph (masked, no
self-loops yet): degree centrality, principal-eigenvector centrality, and
local cluster connectivity.  Their scaled, clamped sum is the per-node
kernel coefficient r in [0, 1] that drives the node-wise operator
D^(r-1) A D^(-r).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError
from .graph import SparseGraph, connected_components, degrees, to_scipy

__all__ = [
    "EncodingConfig",
    "KernelCoefficients",
    "degree_encoding",
    "eigenvector_encoding",
    "cluster_encoding",
    "combine",
    "compute_kernel",
]


@dataclass
class EncodingConfig:
    use_eigen: bool = True
    c_norm: float = 1.0 / 3.0
    power_iter_tol: float = 1e-10
    power_iter_max: int = 10000
    k_order: int = 1
    cluster_variant: str = "literal"  # literal keeps the extra degree factor

    def __post_init__(self):
        if not 0.0 < self.c_norm <= 1.0:
            raise ValidationError("c_norm must lie in (0, 1]")
        if self.power_iter_tol <= 0:
            raise ValidationError("power_iter_tol must be positive")
        if self.power_iter_max < 1:
            raise ValidationError("power_iter_max must be at least 1")
        if self.k_order < 1:
            raise ValidationError("k_order must be at least 1")
        if self.cluster_variant not in ("literal", "standard"):
            raise ValidationError("cluster_variant must be 'literal' or 'standard'")


@dataclass
class KernelCoefficients:
    """Per-node kernel coefficient diagonal and its three components."""

    r_dg: np.ndarray
    r_ev: np.ndarray
    r_cu: np.ndarray
    c_norm: float
    r_tilde: np.ndarray

    def __post_init__(self):
        for name in ("r_dg", "r_ev", "r_cu", "r_tilde"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = len(self.r_tilde)
        if any(len(getattr(self, f)) != n for f in ("r_dg", "r_ev", "r_cu")):
            raise ValidationError("kernel component vectors must share one length")
        if not 0.0 < self.c_norm <= 1.0:
            raise ValidationError("c_norm must lie in (0, 1]")
        if len(self.r_cu) and self.r_cu.min() < 0:
            raise ValidationError("cluster encoding must be non-negative")
        expected = np.clip(self.c_norm * (self.r_dg + self.r_ev + self.r_cu), 0.0, 1.0)
        if not np.allclose(self.r_tilde, expected, rtol=0, atol=1e-12):
            raise ValidationError("r_tilde must equal clamp(c_norm * component sum)")


def _no_loops(g: SparseGraph) -> None:
    if g.has_self_loops:
        raise ValidationError("encodings are computed before self-loop insertion")


def _order_factor(d: np.ndarray, k_order: int) -> np.ndarray:
    # higher orders repeat the diagonal-degree multiplication: sum_{j<K} d^j
    if k_order == 1:
        return np.ones_like(d)
    return sum(d**j for j in range(k_order))


def degree_encoding(g_corrected: SparseGraph, k_order: int = 1) -> np.ndarray:
    """Weighted degree over n-1 (0 for a single-node graph)."""
    _no_loops(g_corrected)
    n = g_corrected.n
    d = degrees(g_corrected).values
    if n <= 1:
        return np.zeros(n)
    return (d / (n - 1)) * _order_factor(d, k_order)


def eigenvector_encoding(g_corrected: SparseGraph, cfg: EncodingConfig) -> np.ndarray:
    """Principal eigenvector of the adjacency, max-normalized per component.

    Power iteration starts from all-ones and runs on A + I: the shift breaks
    the +/- lambda_max tie on bipartite components without changing
    eigenvectors.  Entries of isolated nodes are 0.
    """
    _no_loops(g_corrected)
    if g_corrected.n == 0:
        raise ValidationError("eigenvector encoding needs a non-empty graph")
    comp = connected_components(g_corrected)
    a = to_scipy(g_corrected)
    out = np.zeros(g_corrected.n)
    for c in range(comp.max() + 1):
        idx = np.flatnonzero(comp == c)
        if len(idx) == 1:
            continue  # isolated under positive-weight connectivity
        a_c = a[idx][:, idx]
        x = np.ones(len(idx))
        residual = np.inf
        for _ in range(cfg.power_iter_max):
            y = a_c @ x + x
            y /= y.max()  # iterates stay positive, so max > 0
            residual = float(np.abs(y - x).max())
            x = y
            if residual < cfg.power_iter_tol:
                break
        else:
            raise ConvergenceError(
                f"power iteration did not converge in {cfg.power_iter_max} iterations",
                residual=residual,
            )
        out[idx] = x
    return out


def cluster_encoding(
    g_corrected: SparseGraph, variant: str = "literal", k_order: int = 1
) -> np.ndarray:
    """Local cluster connectivity: triangles among positive-weight neighbors.

    With T_i triangles through node i and weighted degree d_i, the literal
    form is 2 T_i / (d_i - 1) (the degree factor of d * 2T / (d (d-1))
    cancelled); the standard clustering coefficient drops that factor,
    giving 2 T_i / (d_i (d_i - 1)).  Nodes with d_i <= 1 get 0, which also
    covers masked-weight degenerate denominators.
    """
    _no_loops(g_corrected)
    if variant not in ("literal", "standard"):
        raise ValidationError("cluster variant must be 'literal' or 'standard'")
    n = g_corrected.n
    d = degrees(g_corrected).values
    w = g_corrected.weights_view()
    offsets, cols = g_corrected.row_offsets, g_corrected.col_indices

    # positive-weight neighbor lists, sorted by construction
    nbrs: list[np.ndarray] = []
    for u in range(n):
        lo, hi = offsets[u], offsets[u + 1]
        seg = cols[lo:hi]
        nbrs.append(seg[w[lo:hi] > 0])

    out = np.zeros(n)
    for u in range(n):
        if d[u] <= 1.0 or len(nbrs[u]) < 2:
            continue
        paired = 0
        for v in nbrs[u]:
            paired += len(np.intersect1d(nbrs[u], nbrs[int(v)], assume_unique=True))
        t = paired / 2  # each neighbor-neighbor edge counted from both ends
        if variant == "literal":
            out[u] = 2.0 * t / (d[u] - 1.0)
        else:
            out[u] = 2.0 * t / (d[u] * (d[u] - 1.0))
    return out * _order_factor(d, k_order)


def combine(r_dg, r_ev, r_cu, cfg: EncodingConfig) -> KernelCoefficients:
    """Clamp c_norm * (r_dg + r_ev + r_cu) into [0, 1].

    With ``use_eigen`` off the eigenvector component is replaced by zeros
    (and stored as such, so the reported components always reproduce
    r_tilde).
    """
    r_dg = np.asarray(r_dg, dtype=np.float64)
    r_ev = np.asarray(r_ev, dtype=np.float64)
    r_cu = np.asarray(r_cu, dtype=np.float64)
    if not (len(r_dg) == len(r_ev) == len(r_cu)):
        raise ValidationError("encoding vectors must share one length")
    if not cfg.use_eigen:
        r_ev = np.zeros_like(r_ev)
    r_tilde = np.clip(cfg.c_norm * (r_dg + r_ev + r_cu), 0.0, 1.0)
    return KernelCoefficients(r_dg=r_dg, r_ev=r_ev, r_cu=r_cu, c_norm=cfg.c_norm, r_tilde=r_tilde)


def compute_kernel(g_corrected: SparseGraph, cfg: EncodingConfig) -> KernelCoefficients:
    """Run all three encodings on the corrected graph and combine them."""
    r_dg = degree_encoding(g_corrected, cfg.k_order)
    if cfg.use_eigen:
        r_ev = eigenvector_encoding(g_corrected, cfg)
    else:
        r_ev = np.zeros(g_corrected.n)
    r_cu = cluster_encoding(g_corrected, cfg.cluster_variant, cfg.k_order)
    return combine(r_dg, r_ev, r_cu, cfg)
