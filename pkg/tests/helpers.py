"""Shared test utilities: seeded connected random graphs and dense oracles."""

import numpy as np

from atprop import connected_components, generate
from atprop.dense import dense_adjacency


def er_connected(n, p, seed):
    """Erdos-Renyi graph, retrying with derived seeds until connected."""
    for attempt in range(200):
        g = generate("erdos_renyi", n=n, p=p, seed=[seed, attempt])
        if connected_components(g).max() == 0:
            return g
    raise RuntimeError(f"no connected ER(n={n}, p={p}) after 200 attempts")


def principal_eigenvector_oracle(g):
    """Per-component principal eigenvector of the adjacency, max entry 1.

    Independent of the power-iteration path: dense symmetric
    eigendecomposition per component, isolated nodes 0.
    """
    a = dense_adjacency(g)
    comp = connected_components(g)
    out = np.zeros(g.n)
    for c in range(comp.max() + 1):
        idx = np.flatnonzero(comp == c)
        if len(idx) == 1:
            continue
        vals, vecs = np.linalg.eigh(a[np.ix_(idx, idx)])
        v = vecs[:, -1]
        if v.sum() < 0:
            v = -v
        out[idx] = v / v.max()
    return out


def lambda2_oracle(g_looped):
    """Decay rate max(|lambda_2|, |lambda_n|) per component, maximized.

    Dense eigendecomposition of D^(-1/2) A D^(-1/2), independent of the
    spectral module's implementation.
    """
    from atprop import degrees

    a = dense_adjacency(g_looped)
    d = degrees(g_looped).values
    comp = connected_components(g_looped)
    worst = 0.0
    for c in range(comp.max() + 1):
        idx = np.flatnonzero(comp == c)
        if len(idx) == 1:
            continue
        scale = 1.0 / np.sqrt(d[idx])
        s = scale[:, None] * a[np.ix_(idx, idx)] * scale[None, :]
        vals = np.sort(np.linalg.eigvalsh(s))
        worst = max(worst, abs(vals[-2]), abs(vals[0]))
    return worst
