"""Synthetic graphs for experiments and trend checks."""

from __future__ import annotations

import numpy as np

from .sparse import SparseMatrix, from_coo


def powerlaw_graph(n: int, *, arcs_per_node: float = 4.0,
                   exponent: float = 0.8, seed: int = 0) -> SparseMatrix:
    """Random digraph whose indegrees follow a truncated power law.

    Sources are uniform, targets are drawn from p(k) proportional to
    (k + 1)**-exponent, and parallel arcs merge by weight.  A two-cycle
    between the two hottest targets is always planted so the spectral
    radius is strictly positive.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    rng = np.random.default_rng(seed)
    m = int(round(arcs_per_node * n))
    weights = 1.0 / np.power(np.arange(1, n + 1, dtype=np.float64), exponent)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    src = rng.integers(0, n, size=m)
    dst = np.searchsorted(cdf, rng.random(m), side="right")
    keep = src != dst
    rows = np.concatenate([src[keep], [0, 1]])
    cols = np.concatenate([dst[keep], [1, 0]])
    vals = np.ones(rows.size)
    return from_coo(n, rows, cols, vals)
