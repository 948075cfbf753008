"""Node-wise weighted feature propagation.

The operator M = D^(R-1) A D^(-R) is never materialized: the two per-node
scale vectors d^(r-1) and d^(-r) wrap a shared CSR mat-vec, so a node-wise
kernel costs the same as a fixed exponent.  Hop outputs are combined by a
pluggable weight scheme, optionally truncated per node with the remaining
weights renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .encoding import KernelCoefficients
from .errors import NumericError, ValidationError
from .graph import SparseGraph, add_self_loops, degrees, to_scipy

__all__ = [
    "PropagationConfig",
    "NodeWiseOperator",
    "PropagatedFeatures",
    "scheme_weights",
    "build_operator",
    "propagate",
]

SCHEMES = ("sgc", "s2gc", "gbp", "heat", "concat", "custom")


@dataclass
class PropagationConfig:
    """Hop count, weight scheme, and optional per-node depth truncation.

    Schemes: ``sgc`` takes only the last hop, ``s2gc`` averages all hops,
    ``gbp`` uses beta*(1-beta)^i, ``heat`` uses omega^i/(i!)^rho normalized
    over hops 0..k, ``custom`` takes ``custom_weights`` verbatim, and
    ``concat`` keeps per-hop outputs unweighted (forces concat mode).
    """

    k: int = 3
    scheme: str = "s2gc"
    beta: float = 0.5
    omega: float = 1.0
    rho: float = 1.0
    custom_weights: np.ndarray | None = None
    node_depths: np.ndarray | None = None
    mode: str = "sum"

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError("hop count k must be non-negative")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "concat":
            self.mode = "concat"
        if self.mode not in ("sum", "concat"):
            raise ValidationError("mode must be 'sum' or 'concat'")
        if self.node_depths is not None:
            self.node_depths = np.asarray(self.node_depths, dtype=np.int64)


def scheme_weights(cfg: PropagationConfig) -> np.ndarray:
    """Hop weights w_0..w_k for the configured scheme."""
    k = cfg.k
    if cfg.scheme == "sgc":
        w = np.zeros(k + 1)
        w[k] = 1.0
        return w
    if cfg.scheme == "s2gc":
        return np.full(k + 1, 1.0 / (k + 1))
    if cfg.scheme == "gbp":
        if not 0.0 < cfg.beta < 1.0:
            raise ValidationError("gbp beta must lie in (0, 1)")
        return cfg.beta * (1.0 - cfg.beta) ** np.arange(k + 1)
    if cfg.scheme == "heat":
        if cfg.omega <= 0 or cfg.rho <= 0:
            raise ValidationError("heat needs omega > 0 and rho > 0")
        terms = np.array(
            [cfg.omega**l / float(math.factorial(l)) ** cfg.rho for l in range(k + 1)]
        )
        return terms / terms.sum()
    if cfg.scheme == "custom":
        if cfg.custom_weights is None:
            raise ValidationError("custom scheme needs custom_weights")
        w = np.asarray(cfg.custom_weights, dtype=np.float64)
        if w.shape != (k + 1,):
            raise ValidationError(f"custom weights must have length k+1 = {k + 1}")
        if not np.isfinite(w).all():
            raise ValidationError("custom weights must be finite")
        return w
    # concat: hops are emitted unweighted
    return np.ones(k + 1)


@dataclass
class NodeWiseOperator:
    """M = D^(R-1) A D^(-R) over the corrected, self-looped topology."""

    graph: SparseGraph
    d_hat: np.ndarray
    r: np.ndarray
    _matrix: sp.csr_matrix = field(repr=False, default=None)
    _left: np.ndarray = field(repr=False, default=None)
    _right: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.graph.n

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply M to an (n,) vector or (n, f) block."""
        if x.ndim == 1:
            return self._left * (self._matrix @ (self._right * x))
        return self._left[:, None] * (self._matrix @ (self._right[:, None] * x))


def build_operator(
    g_corrected: SparseGraph,
    kernel,
    self_loop_weight: float = 1.0,
) -> NodeWiseOperator:
    """Add self-loops and precompute the two degree-power scale vectors.

    ``kernel`` is a :class:`KernelCoefficients`, a length-n vector, or a
    scalar baseline exponent; values must lie in [0, 1].
    """
    if g_corrected.has_self_loops:
        raise ValidationError("build_operator expects a graph without self-loops")
    looped = add_self_loops(g_corrected, self_loop_weight)
    if isinstance(kernel, KernelCoefficients):
        r = kernel.r_tilde
    else:
        r = np.broadcast_to(np.asarray(kernel, dtype=np.float64), (looped.n,)).copy()
    if len(r) != looped.n:
        raise ValidationError("kernel length must match node count")
    if not np.isfinite(r).all() or (len(r) and (r.min() < 0.0 or r.max() > 1.0)):
        raise ValidationError("kernel coefficients must lie in [0, 1]")
    d_hat = degrees(looped).values
    if np.any(d_hat <= 0):
        raise ValidationError("degenerate degree: self-looped degree must be positive")
    return NodeWiseOperator(
        graph=looped,
        d_hat=d_hat,
        r=r,
        _matrix=to_scipy(looped),
        _left=np.power(d_hat, r - 1.0),
        _right=np.power(d_hat, -r),
    )


@dataclass
class PropagatedFeatures:
    """Either one weighted sum or the list of k+1 per-hop feature blocks."""

    mode: str
    summed: np.ndarray | None = None
    hops: list[np.ndarray] | None = None


def _depth_factors(weights: np.ndarray, depths: np.ndarray, k: int) -> np.ndarray:
    """Per-node renormalization so truncated rows keep the scheme's total weight.

    ``cumsum`` is used for both the partial and the full sum so a depth of k
    yields a factor of exactly 1.0.  Rows whose truncated weights sum to zero
    (last-hop schemes cut early) put the whole total on their final hop,
    signalled by a factor of 0 here and handled by the caller.
    """
    cum = np.cumsum(weights)
    total = cum[-1]
    partial = cum[depths]
    return np.where(partial != 0.0, total / np.where(partial != 0.0, partial, 1.0), 0.0)


def propagate(op: NodeWiseOperator, x: np.ndarray, cfg: PropagationConfig) -> PropagatedFeatures:
    """Iterated mat-vec combination sum_i w_i M^i X.

    In concat mode the unweighted hop blocks [X, MX, ..., M^k X] are
    returned instead.  With ``node_depths`` set, row u stops receiving
    contributions past hop l_u and its weights are renormalized to keep the
    scheme's total.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != op.n:
        raise ValidationError(f"feature rows {x.shape[0]} do not match node count {op.n}")
    if not np.isfinite(x).all():
        raise ValidationError("features must be finite")
    k = cfg.k

    if cfg.mode == "concat":
        hops = [x.copy()]
        cur = x
        for i in range(1, k + 1):
            cur = op.matvec(cur)
            if np.isnan(cur).any():
                raise NumericError(f"NaN produced at hop {i}")
            hops.append(cur.copy())
        return PropagatedFeatures(mode="concat", hops=hops)

    weights = scheme_weights(cfg)
    depths = cfg.node_depths
    if depths is not None:
        if depths.shape != (op.n,):
            raise ValidationError("node_depths must have one entry per node")
        if depths.min() < 0 or depths.max() > k:
            raise ValidationError("node depths must lie in [0, k]")
        factors = _depth_factors(weights, depths, k)
        total = np.cumsum(weights)[-1]

    acc = np.zeros_like(x)
    cur = x
    for i in range(k + 1):
        if i > 0:
            cur = op.matvec(cur)
            if np.isnan(cur).any():
                raise NumericError(f"NaN produced at hop {i}")
        if depths is None:
            coeff = weights[i]
            acc += coeff * cur
        else:
            coeff = np.where(depths >= i, weights[i] * factors, 0.0)
            # rows whose truncated weights sum to 0 take the full mass at
            # their last allowed hop (last-hop schemes truncated early)
            coeff = np.where((factors == 0.0) & (depths == i), total, coeff)
            acc += coeff[:, None] * cur
    return PropagatedFeatures(mode="sum", summed=acc)
