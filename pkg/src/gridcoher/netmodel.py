"""Generator network graphs, weighted Laplacians, and their spectra.

The network is an undirected connected graph of generator buses.  Edge
weights are the linearized electrical coupling strengths between buses,
already scaled to per-unit power; they enter the dynamics only through
the weighted Laplacian.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraphError, GraphError, ParameterError

ZERO_EIG_REL_TOL = 1e-10    # zero-eigenvalue cutoff, relative to max(1, lambda_n)
ORTHO_TOL = 1e-10           # max |U^T U - I| allowed in a spectrum
DIAG_REL_TOL = 1e-8         # diagonalization residual, relative to max(1, lambda_n)
SYMMETRY_TOL = 1e-12        # max asymmetry allowed in an input Laplacian
ER_MAX_RETRIES = 100        # connectivity resampling budget for random graphs

GRAPH_FAMILIES = ("complete", "path", "ring", "grid2d", "random_tree", "erdos_renyi")


def _components(n, edges):
    """Connected components as sorted lists of bus indices (union-find)."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j, _ in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected weighted graph of generator buses.

    ``edges`` holds ``(i, j, weight)`` triples with 0-based bus indices.
    Construction normalizes each edge to ``i < j``, sorts the edge list,
    and rejects self-loops, duplicate pairs, non-positive weights, and
    disconnected topologies.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"need at least 2 buses, got n={self.n}")
        seen = set()
        normalized = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise GraphError(f"self-loop at bus {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
            if w <= 0.0:
                raise GraphError(f"edge ({i}, {j}) has non-positive weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphError(f"duplicate edge between buses {key[0]} and {key[1]}")
            seen.add(key)
            normalized.append((key[0], key[1], w))
        normalized.sort()
        object.__setattr__(self, "edges", tuple(normalized))
        comps = _components(self.n, self.edges)
        if len(comps) > 1:
            raise DisconnectedGraphError(
                f"disconnected graph: components {comps}"
            )


def build_laplacian(g: NetworkGraph) -> np.ndarray:
    """Weighted Laplacian L with L[i, j] = -w_ij off-diagonal."""
    L = np.zeros((g.n, g.n))
    for i, j, w in g.edges:
        L[i, j] -= w
        L[j, i] -= w
        L[i, i] += w
        L[j, j] += w
    return L


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Eigenvalues (ascending) and an orthonormal eigenbasis of a Laplacian.

    The first eigenvalue is pinned to exactly 0 and the first basis column
    to the uniform vector 1/sqrt(n), so that mode 1 is always the rigid
    network-wide shift and modes 2..n carry the inter-bus dynamics.
    """

    eigenvalues: np.ndarray
    eigenbasis: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.eigenvalues, dtype=float)
        U = np.asarray(self.eigenbasis, dtype=float)
        n = w.shape[0]
        if U.shape != (n, n):
            raise ParameterError(f"eigenbasis shape {U.shape} does not match {n} eigenvalues")
        if np.any(np.diff(w) < 0):
            raise GraphError("eigenvalues must be ascending")
        tol = ZERO_EIG_REL_TOL * max(1.0, float(w[-1]))
        if abs(w[0]) > tol:
            raise GraphError(f"first eigenvalue {w[0]} is not zero within {tol}")
        if n >= 2 and w[1] <= tol:
            raise DisconnectedGraphError("graph effectively disconnected: lambda_2 below tolerance")
        if np.max(np.abs(U[:, 0] - 1.0 / np.sqrt(n))) > ORTHO_TOL:
            raise GraphError("first eigenbasis column is not the uniform vector")
        if np.max(np.abs(U.T @ U - np.eye(n))) > ORTHO_TOL:
            raise GraphError("eigenbasis is not orthonormal within tolerance")
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenbasis", U)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def spectrum(L: np.ndarray) -> LaplacianSpectrum:
    """Eigendecomposition of a weighted Laplacian with the rigid mode pinned.

    Parameters
    ----------
    L : (n, n) array
        Symmetric weighted Laplacian (zero row sums, PSD).

    Returns
    -------
    LaplacianSpectrum
        Ascending eigenvalues with lambda_1 set to exactly 0 and an
        orthonormal basis whose first column is exactly 1/sqrt(n).

    Raises
    ------
    GraphError
        If L is asymmetric, indefinite, or fails to diagonalize cleanly.
    DisconnectedGraphError
        If lambda_2 is not positive within tolerance.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ParameterError(f"Laplacian must be square, got shape {L.shape}")
    scale = max(1.0, float(np.max(np.abs(L)))) if L.size else 1.0
    if np.max(np.abs(L - L.T)) > SYMMETRY_TOL * scale:
        raise GraphError("Laplacian is not symmetric within tolerance")
    w, V = np.linalg.eigh(L)
    tol = ZERO_EIG_REL_TOL * max(1.0, float(w[-1]))
    if w[0] < -tol:
        raise GraphError(f"Laplacian is not positive semidefinite: min eigenvalue {w[0]}")
    if n >= 2 and w[1] <= tol:
        raise DisconnectedGraphError("graph effectively disconnected: lambda_2 below tolerance")
    w = w.copy()
    w[0] = 0.0
    U = V.copy()
    u0 = np.full(n, 1.0 / np.sqrt(n))
    U[:, 0] = u0
    for k in range(1, n):
        U[:, k] -= (u0 @ U[:, k]) * u0
        U[:, k] /= np.linalg.norm(U[:, k])
    residual = np.max(np.abs(U.T @ L @ U - np.diag(w)))
    if residual > DIAG_REL_TOL * max(1.0, float(w[-1])):
        raise GraphError(f"diagonalization residual {residual} exceeds tolerance")
    return LaplacianSpectrum(eigenvalues=w, eigenbasis=U)


def effective_resistance_sum(spec: LaplacianSpectrum) -> float:
    """Sum of inverse nonzero eigenvalues; grows with graph sparsity."""
    return float(np.sum(1.0 / spec.eigenvalues[1:]))


def complete_graph_spectrum(n: int, weight: float) -> LaplacianSpectrum:
    """Analytic spectrum of the uniformly weighted complete graph.

    All nonzero eigenvalues equal weight * n exactly, which avoids
    eigensolver noise in closed-form tuning formulas.
    """
    if n < 2:
        raise ParameterError(f"need at least 2 buses, got n={n}")
    if weight <= 0:
        raise ParameterError(f"edge weight must be positive, got {weight}")
    w = np.full(n, float(weight) * n)
    w[0] = 0.0
    # Householder reflection mapping e_1 to the uniform vector; its columns
    # form an orthonormal basis whose tail spans the complement of 1_n.
    u0 = np.full(n, 1.0 / np.sqrt(n))
    v = u0 - np.eye(n)[:, 0]
    U = np.eye(n) - 2.0 * np.outer(v, v) / (v @ v)
    U[:, 0] = u0
    return LaplacianSpectrum(eigenvalues=w, eigenbasis=U)


def _grid_edges(rows, cols, weight):
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, weight))
            if r + 1 < rows:
                edges.append((v, v + cols, weight))
    return edges


def make_graph(family: str, n: int, weight: float = 1.0, seed: int = 0, **extra) -> NetworkGraph:
    """Build a benchmark graph from a named family.

    Parameters
    ----------
    family : str
        One of ``complete``, ``path``, ``ring``, ``grid2d``,
        ``random_tree``, ``erdos_renyi``.
    n : int
        Number of buses.  For ``grid2d`` this must equal rows * cols.
    weight : float
        Uniform edge weight.
    seed : int
        Seed for the random families; deterministic output for a fixed
        (family, n, weight, seed) tuple.
    extra
        ``rows``/``cols`` for grid2d, ``p`` (edge probability) for
        erdos_renyi.

    Raises
    ------
    GraphError
        Unknown family, or an erdos_renyi draw that stays disconnected
        after the resampling budget.
    """
    if weight <= 0:
        raise ParameterError(f"edge weight must be positive, got {weight}")
    if family == "complete":
        edges = [(i, j, weight) for i in range(n) for j in range(i + 1, n)]
        _reject_extra(extra)
        return NetworkGraph(n=n, edges=tuple(edges))
    if family == "path":
        _reject_extra(extra)
        return NetworkGraph(n=n, edges=tuple((i, i + 1, weight) for i in range(n - 1)))
    if family == "ring":
        _reject_extra(extra)
        if n < 3:
            raise GraphError(f"ring needs n >= 3, got n={n}")
        edges = [(i, i + 1, weight) for i in range(n - 1)] + [(0, n - 1, weight)]
        return NetworkGraph(n=n, edges=tuple(edges))
    if family == "grid2d":
        rows, cols = extra.pop("rows", None), extra.pop("cols", None)
        _reject_extra(extra)
        if rows is None or cols is None:
            raise GraphError("grid2d requires rows and cols")
        if rows * cols != n:
            raise GraphError(f"grid2d requires n = rows * cols, got {n} != {rows}*{cols}")
        return NetworkGraph(n=n, edges=tuple(_grid_edges(rows, cols, weight)))
    if family == "random_tree":
        _reject_extra(extra)
        rng = np.random.default_rng(seed)
        edges = [(int(rng.integers(0, v)), v, weight) for v in range(1, n)]
        return NetworkGraph(n=n, edges=tuple(edges))
    if family == "erdos_renyi":
        p = extra.pop("p", None)
        _reject_extra(extra)
        if p is None or not (0.0 <= p <= 1.0):
            raise GraphError(f"erdos_renyi requires edge probability p in [0, 1], got {p}")
        for attempt in range(ER_MAX_RETRIES):
            rng = np.random.default_rng([seed, attempt])
            mask = np.triu(rng.random((n, n)) < p, 1)
            edges = [(int(i), int(j), weight) for i, j in zip(*np.nonzero(mask))]
            if len(_components(n, edges)) == 1:
                return NetworkGraph(n=n, edges=tuple(edges))
        raise GraphError(
            f"erdos_renyi(n={n}, p={p}) stayed disconnected after {ER_MAX_RETRIES} draws"
        )
    raise GraphError(f"unknown graph family {family!r}; choose from {GRAPH_FAMILIES}")


def _reject_extra(extra):
    if extra:
        raise GraphError(f"unexpected graph options: {sorted(extra)}")


def save_edge_list(g: NetworkGraph, path) -> None:
    """Write the graph as a CSV edge list with header ``i,j,k``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "k"])
        for i, j, w in g.edges:
            writer.writerow([i, j, repr(float(w))])


def load_edge_list(path) -> NetworkGraph:
    """Read a CSV edge list (header ``i,j,k``, 0-based indices).

    The bus count is inferred as the largest index plus one.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["i", "j", "k"]:
            raise GraphError(f"edge list {path} must start with header i,j,k")
        edges = []
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise GraphError(f"malformed edge row {row!r} in {path}")
            edges.append((int(row[0]), int(row[1]), float(row[2])))
    if not edges:
        raise GraphError(f"edge list {path} contains no edges")
    n = max(max(i, j) for i, j, _ in edges) + 1
    return NetworkGraph(n=n, edges=tuple(edges))


def save_spectrum_csv(spec: LaplacianSpectrum, path) -> None:
    """Write eigenvalues as CSV ``index,eigenvalue`` with 1-based mode index."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue"])
        for idx, lam in enumerate(spec.eigenvalues, start=1):
            writer.writerow([idx, repr(float(lam))])
