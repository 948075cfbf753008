"""Undirected graphs in canonical CSR form.

All topology in this package flows through :class:`SparseGraph`: a symmetric,
deduplicated, row-sorted CSR with optional non-negative edge weights.  A weight
of exactly 0 marks a masked edge: it is kept structurally but contributes
nothing to degrees, connectivity, or propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidStateError, ParseError, ValidationError

__all__ = [
    "SparseGraph",
    "DegreeVector",
    "from_edge_pairs",
    "load_edge_list",
    "save_edge_list",
    "add_self_loops",
    "degrees",
    "loop_weights",
    "connected_components",
    "generate",
    "to_scipy",
    "validate_graph",
]

#: Relative tolerance used when checking that both stored directions of an
#: edge carry the same weight.
_SYMMETRY_RTOL = 1e-9


@dataclass
class SparseGraph:
    """Symmetric CSR adjacency.

    ``col_indices`` stores both directions of every non-loop edge and each
    self-loop once (on the diagonal).  ``edge_weights is None`` means every
    stored edge has weight 1.  Arrays are frozen after construction; the
    object is safe to share across threads.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    edge_weights: np.ndarray | None = None
    has_self_loops: bool = False

    def __post_init__(self):
        self.row_offsets = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        if self.edge_weights is not None:
            self.edge_weights = np.ascontiguousarray(self.edge_weights, dtype=np.float64)
        if self.n < 0:
            raise ValidationError("node count must be non-negative")
        if self.row_offsets.shape != (self.n + 1,):
            raise ValidationError("row_offsets must have length n+1")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != len(self.col_indices):
            raise ValidationError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ValidationError("row_offsets must be non-decreasing")
        for arr in (self.row_offsets, self.col_indices, self.edge_weights):
            if arr is not None:
                arr.setflags(write=False)

    # -- light accessors -------------------------------------------------

    @property
    def nnz(self) -> int:
        """Number of stored (directed) entries."""
        return len(self.col_indices)

    def num_edges(self) -> int:
        """Number of undirected edges, self-loops counted once."""
        loops = int(np.count_nonzero(self.col_indices == self._row_ids()))
        return (self.nnz - loops) // 2 + loops

    def num_nonloop_edges(self) -> int:
        loops = int(np.count_nonzero(self.col_indices == self._row_ids()))
        return (self.nnz - loops) // 2

    def _row_ids(self) -> np.ndarray:
        """Row index of every stored entry (cached; arrays are frozen)."""
        cached = getattr(self, "_row_ids_cache", None)
        if cached is None:
            cached = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_offsets))
            cached.setflags(write=False)
            object.__setattr__(self, "_row_ids_cache", cached)
        return cached

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor ids and weights of ``u`` (views into the CSR arrays)."""
        lo, hi = self.row_offsets[u], self.row_offsets[u + 1]
        cols = self.col_indices[lo:hi]
        w = self.weights_view()[lo:hi]
        return cols, w

    def weights_view(self) -> np.ndarray:
        """Per-entry weights; an all-ones array when the graph is unweighted."""
        if self.edge_weights is not None:
            return self.edge_weights
        cached = getattr(self, "_ones_cache", None)
        if cached is None:
            cached = np.ones(self.nnz)
            cached.setflags(write=False)
            object.__setattr__(self, "_ones_cache", cached)
        return cached


@dataclass
class DegreeVector:
    """Weighted degree per node (self-loop weight counted once)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def from_edge_pairs(
    n: int,
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray | None = None,
) -> SparseGraph:
    """Build a canonical CSR from unique undirected pairs (loops listed once).

    Pairs must already be deduplicated; duplicates raise.  Weights default
    to an unweighted graph when ``w`` is None.
    """
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.shape != v.shape:
        raise ValidationError("edge endpoint arrays must have equal length")
    if len(u) and (u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= n):
        raise ValidationError("edge endpoint out of range [0, n)")
    if w is not None:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != u.shape:
            raise ValidationError("weight array must match edge count")
        if not np.isfinite(w).all():
            raise ValidationError("edge weights must be finite")
        if len(w) and w.min() < 0:
            raise ValidationError("edge weights must be non-negative")

    nonloop = u != v
    src = np.concatenate([u, v[nonloop]])
    dst = np.concatenate([v, u[nonloop]])
    ww = None if w is None else np.concatenate([w, w[nonloop]])

    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    if ww is not None:
        ww = ww[order]
    if len(src) > 1:
        dup = (np.diff(src) == 0) & (np.diff(dst) == 0)
        if dup.any():
            i = int(np.flatnonzero(dup)[0])
            raise ValidationError(f"duplicate edge ({src[i]}, {dst[i]})")

    offsets = np.zeros(n + 1, dtype=np.int64)
    counts = np.bincount(src, minlength=n)
    offsets[1:] = np.cumsum(counts)
    return SparseGraph(
        n=n,
        row_offsets=offsets,
        col_indices=dst,
        edge_weights=ww,
        has_self_loops=bool(np.any(u == v)),
    )


def load_edge_list(path, n_hint: int | None = None, symmetrize: bool = False) -> SparseGraph:
    """Load a whitespace-separated ``u v [w]`` edge list.

    Lines starting with ``#`` are ignored.  Parallel entries of the same
    directed pair collapse by summing weights; listing an edge in both
    directions is the usual redundant symmetric storage and the two sides
    must agree.  Disagreeing directions are directed input, which is
    rejected unless ``symmetrize`` is set (then the larger weight wins).
    """
    # slot 0 accumulates (min,max)-ordered listings, slot 1 the reverse.
    acc: dict[tuple[int, int], list] = {}
    max_id = -1
    any_weight = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            parts = body.split()
            if len(parts) not in (2, 3):
                raise ParseError("expected 'u v' or 'u v w'", line=lineno)
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {parts[:2]}", line=lineno) from None
            w = 1.0
            if len(parts) == 3:
                any_weight = True
                try:
                    w = float(parts[2])
                except ValueError:
                    raise ParseError(f"non-numeric weight {parts[2]!r}", line=lineno) from None
                if not math.isfinite(w):
                    raise ParseError(f"non-finite weight {parts[2]!r}", line=lineno)
            if a < 0 or b < 0:
                raise ValidationError(f"line {lineno}: negative node id")
            if w < 0:
                raise ValidationError(f"line {lineno}: negative edge weight")
            max_id = max(max_id, a, b)
            key = (a, b) if a <= b else (b, a)
            slot = 0 if a <= b else 1
            entry = acc.setdefault(key, [0.0, 0.0, False, False])
            entry[slot] += w
            entry[2 + slot] = True

    n = max_id + 1
    if n_hint is not None:
        n = max(n, int(n_hint))

    uu, vv, ww = [], [], []
    for (a, b), (w0, w1, seen0, seen1) in sorted(acc.items()):
        if seen0 and seen1:
            if not math.isclose(w0, w1, rel_tol=_SYMMETRY_RTOL, abs_tol=1e-12):
                if not symmetrize:
                    raise ValidationError(
                        f"edge ({a},{b}) listed with asymmetric weights "
                        f"{w0:g}/{w1:g}; pass symmetrize=True to take the max"
                    )
                w = max(w0, w1)
            else:
                w = w0
        else:
            w = w0 if seen0 else w1
        uu.append(a)
        vv.append(b)
        ww.append(w)

    weights = np.asarray(ww, dtype=np.float64) if any_weight else None
    g = from_edge_pairs(n, np.asarray(uu, dtype=np.int64), np.asarray(vv, dtype=np.int64), weights)
    validate_graph(g)
    return g


def save_edge_list(g: SparseGraph, path) -> None:
    """Write one line per undirected edge; weights only if the graph has them."""
    rows = g._row_ids()
    cols = g.col_indices
    keep = rows <= cols  # each undirected edge once, loops included
    with open(path, "w", encoding="utf-8") as fh:
        if g.edge_weights is None:
            for a, b in zip(rows[keep], cols[keep]):
                fh.write(f"{a} {b}\n")
        else:
            for a, b, w in zip(rows[keep], cols[keep], g.edge_weights[keep]):
                fh.write(f"{a} {b} {w:.17g}\n")


# ---------------------------------------------------------------------------
# basic operations
# ---------------------------------------------------------------------------


def degrees(g: SparseGraph) -> DegreeVector:
    """Weighted degree per node: row-sum of stored weights (loops once)."""
    out = np.zeros(g.n)
    if g.nnz:
        np.add.at(out, g._row_ids(), g.weights_view())
    return DegreeVector(out)


def loop_weights(g: SparseGraph) -> np.ndarray:
    """Self-loop weight per node (0 where absent)."""
    out = np.zeros(g.n)
    if not g.has_self_loops:
        return out
    rows = g._row_ids()
    mask = rows == g.col_indices
    out[rows[mask]] = g.weights_view()[mask]
    return out


def add_self_loops(g: SparseGraph, weight: float = 1.0) -> SparseGraph:
    """Return a copy with loop ``(i, i, weight)`` inserted at every node."""
    if g.has_self_loops:
        raise InvalidStateError("graph already has self-loops")
    if weight < 0 or not math.isfinite(weight):
        raise ValidationError("self-loop weight must be finite and non-negative")
    rows = g._row_ids()
    u = np.concatenate([rows[rows < g.col_indices], np.arange(g.n, dtype=np.int64)])
    v = np.concatenate([g.col_indices[rows < g.col_indices], np.arange(g.n, dtype=np.int64)])
    if g.edge_weights is None and weight == 1.0:
        w = None
    else:
        base = g.weights_view()[rows < g.col_indices]
        w = np.concatenate([base, np.full(g.n, weight)])
    return from_edge_pairs(g.n, u, v, w)


def connected_components(g: SparseGraph) -> np.ndarray:
    """Component id per node, dense in first-seen order; weight-0 edges do not connect."""
    comp = np.full(g.n, -1, dtype=np.int64)
    w = g.weights_view()
    next_id = 0
    stack: list[int] = []
    for start in range(g.n):
        if comp[start] >= 0:
            continue
        comp[start] = next_id
        stack.append(start)
        while stack:
            u = stack.pop()
            lo, hi = g.row_offsets[u], g.row_offsets[u + 1]
            for v, wv in zip(g.col_indices[lo:hi], w[lo:hi]):
                if wv > 0 and comp[v] < 0:
                    comp[v] = next_id
                    stack.append(int(v))
        next_id += 1
    return comp


def to_scipy(g: SparseGraph) -> sp.csr_matrix:
    """Adjacency as a scipy CSR (weight-0 entries kept, contributing zeros)."""
    return sp.csr_matrix(
        (g.weights_view(), g.col_indices, g.row_offsets), shape=(g.n, g.n)
    )


def validate_graph(g: SparseGraph) -> None:
    """Check the full CSR contract: sorted rows, symmetry, weight ranges."""
    if len(g.col_indices) and (g.col_indices.min() < 0 or g.col_indices.max() >= g.n):
        raise ValidationError("col_indices out of range [0, n)")
    offsets, cols = g.row_offsets, g.col_indices
    for u in range(g.n):
        seg = cols[offsets[u] : offsets[u + 1]]
        if len(seg) > 1 and np.any(np.diff(seg) <= 0):
            raise ValidationError(f"row {u} not strictly increasing")
    w = g.weights_view()
    if not np.isfinite(w).all():
        raise ValidationError("edge weights must be finite")
    if len(w) and w.min() < 0:
        raise ValidationError("edge weights must be non-negative")
    rows = g._row_ids()
    # symmetry: the multiset of (v, u, w) must equal (u, v, w)
    fwd = np.lexsort((cols, rows))
    rev = np.lexsort((rows, cols))
    if not (
        np.array_equal(rows[fwd], cols[rev])
        and np.array_equal(cols[fwd], rows[rev])
        and np.allclose(w[fwd], w[rev], rtol=_SYMMETRY_RTOL, atol=0)
    ):
        raise ValidationError("adjacency is not symmetric")
    loops = bool(np.any(rows == cols))
    if loops != g.has_self_loops:
        raise ValidationError("has_self_loops flag inconsistent with storage")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def generate(kind: str, seed: int | None = None, **params) -> SparseGraph:
    """Deterministic test-graph families.

    Supported kinds: ``path``, ``cycle``, ``star``, ``complete``,
    ``erdos_renyi`` (n, p), ``sbm`` (sizes, p_in, p_out).  ``star(n)`` puts
    the hub at node 0 with n-1 leaves.
    """
    try:
        builder = _GENERATORS[kind]
    except KeyError:
        raise ValidationError(f"unknown graph kind {kind!r}") from None
    return builder(seed=seed, **params)


def _pairs(edges) -> tuple[np.ndarray, np.ndarray]:
    if not edges:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    arr = np.asarray(edges, dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def _gen_path(n: int, seed=None) -> SparseGraph:
    if n < 1:
        raise ValidationError("path needs n >= 1")
    u, v = _pairs([(i, i + 1) for i in range(n - 1)])
    return from_edge_pairs(n, u, v)


def _gen_cycle(n: int, seed=None) -> SparseGraph:
    if n < 3:
        raise ValidationError("cycle needs n >= 3")
    u, v = _pairs([(i, (i + 1) % n) for i in range(n)])
    return from_edge_pairs(n, u, v)


def _gen_star(n: int, seed=None) -> SparseGraph:
    if n < 2:
        raise ValidationError("star needs n >= 2")
    u, v = _pairs([(0, i) for i in range(1, n)])
    return from_edge_pairs(n, u, v)


def _gen_complete(n: int, seed=None) -> SparseGraph:
    if n < 1:
        raise ValidationError("complete needs n >= 1")
    u, v = _pairs([(i, j) for i in range(n) for j in range(i + 1, n)])
    return from_edge_pairs(n, u, v)


def _gen_erdos_renyi(n: int, p: float, seed=None) -> SparseGraph:
    if n < 1:
        raise ValidationError("erdos_renyi needs n >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValidationError("edge probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return from_edge_pairs(n, iu[keep], ju[keep])


def _gen_sbm(sizes, p_in: float, p_out: float, seed=None) -> SparseGraph:
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ValidationError("sbm needs positive block sizes")
    for p in (p_in, p_out):
        if not 0.0 <= p <= 1.0:
            raise ValidationError("block probabilities must lie in [0, 1]")
    n = sum(sizes)
    block = np.repeat(np.arange(len(sizes)), sizes)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    return from_edge_pairs(n, iu[keep], ju[keep])


_GENERATORS = {
    "path": _gen_path,
    "cycle": _gen_cycle,
    "star": _gen_star,
    "complete": _gen_complete,
    "erdos_renyi": _gen_erdos_renyi,
    "sbm": _gen_sbm,
}
