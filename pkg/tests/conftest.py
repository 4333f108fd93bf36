"""Shared helpers for the test suite."""

import numpy as np

from gridcoher import make_graph


def random_connected_graph(rng, n_lo=3, n_hi=50, families=None, weight=None):
    """One random connected benchmark graph drawn from the mixed families.

    Uses only families whose smallest coupled eigenvalue stays well away
    from zero at these sizes, so closed-form comparisons remain well
    conditioned.
    """
    families = families or ("complete", "ring", "grid2d", "random_tree", "erdos_renyi")
    family = families[int(rng.integers(0, len(families)))]
    seed = int(rng.integers(0, 2**31))
    weight = float(rng.uniform(0.5, 3.0)) if weight is None else weight
    if family == "grid2d":
        rows = int(rng.integers(2, 6))
        cols = int(rng.integers(2, 6))
        return make_graph("grid2d", rows * cols, weight, seed=seed, rows=rows, cols=cols)
    n = int(rng.integers(n_lo, n_hi + 1))
    if family == "ring":
        n = max(n, 3)
        return make_graph("ring", n, weight, seed=seed)
    if family == "erdos_renyi":
        return make_graph("erdos_renyi", n, weight, seed=seed, p=float(rng.uniform(0.4, 0.9)))
    return make_graph(family, n, weight, seed=seed)


def laplacian_dense(g):
    """Reference Laplacian built entry by entry, independent of the library."""
    L = np.zeros((g.n, g.n))
    for i, j, w in g.edges:
        L[i, i] += w
        L[j, j] += w
        L[i, j] -= w
        L[j, i] -= w
    return L
