"""Graph construction, Laplacian spectra, and edge-list round trips."""

import numpy as np
import pytest

from conftest import laplacian_dense, random_connected_graph
from gridcoher import (
    DisconnectedGraphError,
    GraphError,
    NetworkGraph,
    ParameterError,
    build_laplacian,
    complete_graph_spectrum,
    effective_resistance_sum,
    load_edge_list,
    make_graph,
    save_edge_list,
    save_spectrum_csv,
    spectrum,
)


def test_single_edge_laplacian():
    g = NetworkGraph(n=2, edges=((0, 1, 1.0),))
    assert np.array_equal(build_laplacian(g), np.array([[1.0, -1.0], [-1.0, 1.0]]))


def test_complete_triangle_laplacian():
    g = make_graph("complete", 3)
    L = build_laplacian(g)
    assert np.array_equal(np.diag(L), np.full(3, 2.0))
    assert np.array_equal(L - np.diag(np.diag(L)), -np.ones((3, 3)) + np.eye(3))


@pytest.mark.parametrize("seed", range(8))
def test_laplacian_row_sums_and_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    L = build_laplacian(g)
    assert np.array_equal(L, laplacian_dense(g))
    assert np.max(np.abs(L.sum(axis=1))) <= 1e-12 * max(1.0, np.max(np.abs(L)))
    assert np.array_equal(L, L.T)


def test_graph_validation_rejects_bad_edges():
    with pytest.raises(GraphError, match="self-loop"):
        NetworkGraph(n=3, edges=((0, 0, 1.0), (0, 1, 1.0), (1, 2, 1.0)))
    with pytest.raises(GraphError, match="duplicate"):
        NetworkGraph(n=2, edges=((0, 1, 1.0), (1, 0, 2.0)))
    with pytest.raises(GraphError, match="non-positive"):
        NetworkGraph(n=2, edges=((0, 1, -1.0),))
    with pytest.raises(GraphError, match="out of range"):
        NetworkGraph(n=2, edges=((0, 2, 1.0),))
    with pytest.raises(ParameterError):
        NetworkGraph(n=1, edges=())


def test_disconnected_graph_error_names_components():
    with pytest.raises(DisconnectedGraphError, match=r"\[0, 1\].*\[2, 3\]"):
        NetworkGraph(n=4, edges=((0, 1, 1.0), (2, 3, 1.0)))


def test_spectrum_two_bus_reference():
    spec = spectrum(build_laplacian(make_graph("path", 2)))
    assert spec.eigenvalues[0] == 0.0
    assert abs(spec.eigenvalues[1] - 2.0) <= 1e-12


def test_spectrum_three_bus_path():
    # brute-force expected spectrum of the 3-bus chain with unit coupling
    spec = spectrum(build_laplacian(make_graph("path", 3)))
    assert np.allclose(spec.eigenvalues, [0.0, 1.0, 3.0], atol=1e-12)


def test_spectrum_complete_graph_eigenvalues():
    n, b = 6, 2.5
    spec = spectrum(build_laplacian(make_graph("complete", n, b)))
    assert spec.eigenvalues[0] == 0.0
    assert np.allclose(spec.eigenvalues[1:], b * n, rtol=1e-12)


def test_spectrum_pins_uniform_eigenvector():
    spec = spectrum(build_laplacian(make_graph("ring", 7)))
    assert np.array_equal(spec.eigenbasis[:, 0], np.full(7, 1.0 / np.sqrt(7)))


@pytest.mark.parametrize("seed", range(10))
def test_spectrum_orthonormal_and_diagonalizing(seed):
    rng = np.random.default_rng([1, seed])
    g = random_connected_graph(rng, n_hi=100)
    L = build_laplacian(g)
    spec = spectrum(L)
    n = g.n
    U, w = spec.eigenbasis, spec.eigenvalues
    assert np.max(np.abs(U.T @ U - np.eye(n))) <= 1e-10
    assert np.max(np.abs(U.T @ L @ U - np.diag(w))) <= 1e-8 * max(1.0, w[-1])
    assert np.all(np.diff(w) >= 0)
    # exactly one zero eigenvalue within tolerance on a connected graph
    tol = 1e-10 * max(1.0, w[-1])
    assert np.sum(np.abs(w) <= tol) == 1
    assert w[0] == 0.0 and w[1] > tol


def test_spectrum_rejects_asymmetric_matrix():
    M = np.array([[1.0, -1.0], [-0.5, 1.0]])
    with pytest.raises(GraphError, match="symmetric"):
        spectrum(M)


def test_spectrum_flags_effectively_disconnected():
    L = np.array(
        [
            [1.0, -1.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, -1.0],
            [0.0, 0.0, -1.0, 1.0],
        ]
    )
    with pytest.raises(DisconnectedGraphError, match="effectively disconnected"):
        spectrum(L)


def test_complete_graph_spectrum_matches_eigensolver():
    analytic = complete_graph_spectrum(9, 1.75)
    solved = spectrum(build_laplacian(make_graph("complete", 9, 1.75)))
    assert np.allclose(analytic.eigenvalues, solved.eigenvalues, rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(analytic.eigenbasis.T @ analytic.eigenbasis - np.eye(9))) <= 1e-12


def test_make_graph_families_shapes():
    assert len(make_graph("complete", 4).edges) == 6
    path = make_graph("path", 5, 2.0)
    assert path.edges == tuple((i, i + 1, 2.0) for i in range(4))
    assert len(make_graph("ring", 6).edges) == 6
    grid = make_graph("grid2d", 12, rows=3, cols=4)
    assert len(grid.edges) == 17
    tree = make_graph("random_tree", 30, seed=7)
    assert len(tree.edges) == 29


def test_make_graph_determinism():
    for family, kwargs in [
        ("random_tree", {}),
        ("erdos_renyi", {"p": 0.4}),
    ]:
        a = make_graph(family, 25, 1.0, seed=11, **kwargs)
        b = make_graph(family, 25, 1.0, seed=11, **kwargs)
        assert a.edges == b.edges
        c = make_graph(family, 25, 1.0, seed=12, **kwargs)
        assert a.edges != c.edges


def test_make_graph_bad_inputs():
    with pytest.raises(GraphError, match="unknown graph family"):
        make_graph("torus", 5)
    with pytest.raises(GraphError, match="rows and cols"):
        make_graph("grid2d", 12)
    with pytest.raises(GraphError, match="rows"):
        make_graph("grid2d", 12, rows=3, cols=5)
    with pytest.raises(GraphError, match="ring needs"):
        make_graph("ring", 2)
    with pytest.raises(ParameterError):
        make_graph("path", 4, weight=0.0)


def test_erdos_renyi_gives_up_after_retries():
    with pytest.raises(GraphError, match="disconnected after"):
        make_graph("erdos_renyi", 20, p=0.0)


def test_effective_resistance_triangle():
    # brute force: K_3 unit weights has nonzero eigenvalues {3, 3}
    spec = spectrum(build_laplacian(make_graph("complete", 3)))
    assert abs(effective_resistance_sum(spec) - 2.0 / 3.0) <= 1e-12


def test_effective_resistance_two_bus():
    spec = spectrum(build_laplacian(make_graph("path", 2)))
    assert abs(effective_resistance_sum(spec) - 0.5) <= 1e-12


def test_effective_resistance_path_grows_superlinearly():
    sums = []
    for n in (8, 16, 32, 64):
        sums.append(effective_resistance_sum(spectrum(build_laplacian(make_graph("path", n)))))
    assert all(b > a for a, b in zip(sums, sums[1:]))
    for a, b in zip(sums, sums[1:]):
        assert b / a > 2.0  # doubling n more than doubles the sum


def test_edge_list_roundtrip(tmp_path):
    g = make_graph("erdos_renyi", 12, 1.5, seed=3, p=0.5)
    path = tmp_path / "edges.csv"
    save_edge_list(g, path)
    assert path.read_text().splitlines()[0] == "i,j,k"
    g2 = load_edge_list(path)
    assert g2.n == g.n
    assert g2.edges == g.edges


def test_edge_list_requires_header(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("0,1,1.0\n")
    with pytest.raises(GraphError, match="header"):
        load_edge_list(path)


def test_spectrum_csv(tmp_path):
    spec = spectrum(build_laplacian(make_graph("path", 3)))
    path = tmp_path / "spectrum.csv"
    save_spectrum_csv(spec, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,eigenvalue"
    assert len(lines) == 4
    assert lines[1].startswith("1,0.0")
