"""High-bias propagation correction: degree-targeted edge masking.

Densely connected nodes dominate the convergence of repeated propagation, so
a selected subset of nodes gets a fraction of its incident edges multiplied
by a mask token in [0, 1] (0 removes the edge's weight entirely).  Selection
is either by degree rank plus a random sample of the remaining nodes, or by
thresholding the per-node spectral convergence bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dense import DENSE_LIMIT
from .errors import CapabilityError, ValidationError
from .graph import SparseGraph, add_self_loops, degrees
from .spectral import second_eigenvalue

__all__ = [
    "MaskPlan",
    "CorrectionReport",
    "select_nodes",
    "select_nodes_epsilon",
    "resolve_plan",
    "apply_mask",
]

# Guards float fuzz in expressions like ceil(0.2 * 5); never changes an
# exact-integer quota.
_FRAC_EPS = 1e-9


def _fuzzy_ceil(x: float) -> int:
    return int(math.ceil(x - _FRAC_EPS))


def _fuzzy_floor(x: float) -> int:
    return int(math.floor(x + _FRAC_EPS))


@dataclass
class MaskPlan:
    """Selection and masking parameters plus their seeded resolution.

    Defaults follow the recommended operating point: top 10% of nodes by
    degree, a 0.2 random sample of the rest, half of each selected node's
    edges masked, token 0 (removal).
    """

    theta: float = 0.10
    sparse_sample_ratio: float = 0.2
    edge_mask_fraction: float = 0.5
    mask_token: float = 0.0
    seed: int = 0
    selected_nodes: np.ndarray | None = None
    masked_edges: np.ndarray | None = None  # (k, 2) pairs with u < v

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValidationError("theta must lie in [0, 1]")
        if not 0.0 <= self.sparse_sample_ratio <= 0.5:
            raise ValidationError("sparse_sample_ratio must lie in [0, 0.5]")
        if not 0.0 <= self.edge_mask_fraction <= 1.0:
            raise ValidationError("edge_mask_fraction must lie in [0, 1]")
        if not 0.0 <= self.mask_token <= 1.0:
            raise ValidationError("mask_token must lie in [0, 1]")


@dataclass
class CorrectionReport:
    edges_before: int
    edges_masked: int
    edges_removed: int
    degree_reduction_per_selected_node: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.edges_masked > self.edges_before:
            raise ValidationError("edges_masked cannot exceed edges_before")
        if self.edges_removed > self.edges_masked:
            raise ValidationError("edges_removed cannot exceed edges_masked")


def select_nodes(
    g: SparseGraph, theta: float, sparse_sample_ratio: float, seed: int
) -> np.ndarray:
    """Top ceil(theta*n) nodes by degree plus a seeded sample of the rest.

    Degree-rank ties break toward the smaller node id.  The sample draws
    floor(ratio * n_remaining) of the non-top nodes uniformly without
    replacement.  Returns sorted node ids.
    """
    if g.has_self_loops:
        raise ValidationError("node selection uses the raw graph without self-loops")
    if not 0.0 <= theta <= 1.0:
        raise ValidationError("theta must lie in [0, 1]")
    if not 0.0 <= sparse_sample_ratio <= 0.5:
        raise ValidationError("sparse_sample_ratio must lie in [0, 0.5]")
    n = g.n
    d = degrees(g).values
    order = np.lexsort((np.arange(n), -d))
    n_top = min(n, _fuzzy_ceil(theta * n))
    top = order[:n_top]
    rest = order[n_top:]
    n_sample = min(len(rest), _fuzzy_floor(sparse_sample_ratio * len(rest)))
    if n_sample > 0:
        rng = np.random.default_rng([int(seed), 0])
        sampled = rng.choice(np.sort(rest), size=n_sample, replace=False)
    else:
        sampled = np.zeros(0, dtype=np.int64)
    return np.sort(np.concatenate([top, sampled])).astype(np.int64)


def select_nodes_epsilon(
    g: SparseGraph,
    epsilon: float,
    k: int,
    lambda2: float | None = None,
    dense_limit: int = DENSE_LIMIT,
) -> np.ndarray:
    """Nodes whose k-step convergence bound still exceeds ``epsilon``.

    The bound sqrt((2m+n)/d_i) * lambda2^k is evaluated on the self-looped
    graph; nodes above the threshold are the slow-to-converge ones picked
    for masking.  ``lambda2`` may be supplied for graphs past the dense
    eigensolver limit.
    """
    if g.has_self_loops:
        raise ValidationError("node selection uses the raw graph without self-loops")
    if k < 0:
        raise ValidationError("k must be non-negative")
    looped = add_self_loops(g)
    if lambda2 is None:
        if g.n > dense_limit:
            raise CapabilityError(
                f"n={g.n} exceeds dense limit {dense_limit}; supply lambda2 explicitly"
            )
        lambda2 = second_eigenvalue(looped, "dense", dense_limit=dense_limit)
    d_tilde = degrees(looped).values
    m = g.num_nonloop_edges()
    bound = np.sqrt((2 * m + g.n) / d_tilde) * lambda2**k
    return np.flatnonzero(bound > epsilon).astype(np.int64)


def resolve_plan(g: SparseGraph, plan: MaskPlan) -> MaskPlan:
    """Fill in ``selected_nodes`` (if absent) from the plan's parameters."""
    if plan.selected_nodes is not None:
        sel = np.asarray(plan.selected_nodes, dtype=np.int64)
        if len(sel) and (sel.min() < 0 or sel.max() >= g.n):
            raise ValidationError("selected node id out of range for this graph")
        plan.selected_nodes = np.unique(sel)
        return plan
    plan.selected_nodes = select_nodes(g, plan.theta, plan.sparse_sample_ratio, plan.seed)
    return plan


def apply_mask(g: SparseGraph, plan: MaskPlan) -> tuple[SparseGraph, CorrectionReport]:
    """Multiply a seeded choice of each selected node's edges by the token.

    Each selected node u masks floor(fraction * deg(u)) of its incident
    non-loop edges, chosen uniformly without replacement; an edge between two
    selected nodes counts against the lower-id endpoint only, so nothing is
    masked twice.  Both stored directions change, keeping the graph symmetric.
    """
    if g.has_self_loops:
        raise ValidationError("apply_mask expects a graph without self-loops")
    plan = resolve_plan(g, plan)
    selected = plan.selected_nodes
    in_selection = np.zeros(g.n, dtype=bool)
    in_selection[selected] = True

    rng = np.random.default_rng([int(plan.seed), 1])
    masked_pairs: list[tuple[int, int]] = []
    for u in selected:
        cols, _ = g.row(int(u))
        deg_u = len(cols)
        # edges shared with a lower-id selected neighbor belong to that node
        pool = cols[~in_selection[cols] | (cols > u)]
        quota = min(_fuzzy_floor(plan.edge_mask_fraction * deg_u), len(pool))
        if quota <= 0:
            continue
        chosen = rng.choice(pool, size=quota, replace=False)
        for v in chosen:
            a, b = (int(u), int(v)) if u < v else (int(v), int(u))
            masked_pairs.append((a, b))

    new_weights = g.weights_view().copy()
    d_before = degrees(g).values
    for a, b in masked_pairs:
        for x, y in ((a, b), (b, a)):
            lo, hi = g.row_offsets[x], g.row_offsets[x + 1]
            pos = lo + int(np.searchsorted(g.col_indices[lo:hi], y))
            new_weights[pos] *= plan.mask_token

    masked = SparseGraph(
        n=g.n,
        row_offsets=g.row_offsets.copy(),
        col_indices=g.col_indices.copy(),
        edge_weights=new_weights,
        has_self_loops=False,
    )
    plan.masked_edges = (
        np.asarray(sorted(masked_pairs), dtype=np.int64).reshape(-1, 2)
        if masked_pairs
        else np.zeros((0, 2), dtype=np.int64)
    )
    d_after = degrees(masked).values
    report = CorrectionReport(
        edges_before=g.num_nonloop_edges(),
        edges_masked=len(masked_pairs),
        edges_removed=len(masked_pairs) if plan.mask_token == 0.0 else 0,
        degree_reduction_per_selected_node=[
            float(d_before[u] - d_after[u]) for u in selected
        ],
    )
    return masked, report
