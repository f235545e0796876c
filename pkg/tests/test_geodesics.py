import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fracdiffmap.errors import DisconnectedGraphError, InvalidArgumentError
from fracdiffmap.geodesics import (
    DistanceKind,
    DistanceMatrix,
    DistanceMode,
    SparseGraph,
    all_pairs_shortest_paths,
    connecting_threshold,
    epsilon_graph,
    geodesic_estimate,
    graph_distances,
    pairwise_euclidean,
    read_matrix_binary,
    write_matrix_binary,
    write_matrix_csv,
)
from fracdiffmap.kernels import FdmConfig
from fracdiffmap.manifolds import PointCloud, circle_random, circle_uniform_grid, sphere_icosphere_grid


def test_pairwise_345():
    A = pairwise_euclidean(PointCloud(np.array([[0.0, 0.0], [3.0, 4.0]])))
    assert A.values[0, 1] == 5.0 and A.values[1, 0] == 5.0
    assert A.kind == DistanceKind.EUCLIDEAN


def test_pairwise_matches_loop(rng):
    X = rng.normal(size=(6, 3))
    A = pairwise_euclidean(PointCloud(X)).values
    np.testing.assert_allclose(A, oracles.pairwise_loop(X), atol=1e-14, rtol=0)
    assert np.all(np.diag(A) == 0)
    assert np.array_equal(A, A.T)


def test_pairwise_needs_two_points():
    with pytest.raises(InvalidArgumentError):
        pairwise_euclidean(PointCloud(np.zeros((1, 2))))


def test_epsilon_graph_extremes(rng):
    c = PointCloud(rng.normal(size=(9, 2)))
    A = pairwise_euclidean(c)
    off = A.values[~np.eye(9, dtype=bool)]
    assert epsilon_graph(A, off.min()).n_edges == 0
    assert epsilon_graph(A, off.max() * 1.01).n_edges == 36
    with pytest.raises(InvalidArgumentError):
        epsilon_graph(A, 0.0)


def test_epsilon_graph_strict_inequality():
    A = pairwise_euclidean(PointCloud(np.array([[0.0], [1.0], [3.0]])))
    g = epsilon_graph(A, 1.0)
    assert g.n_edges == 0
    assert epsilon_graph(A, np.nextafter(1.0, 2.0)).n_edges == 1


def test_circle100_degree_from_chord_formula():
    N, thr = 100, 3 * 2 * np.pi / 100
    A = pairwise_euclidean(circle_uniform_grid(N))
    g = epsilon_graph(A, thr)
    k = np.arange(1, N // 2)
    per_side = int(np.sum(2 * np.sin(k * np.pi / N) < thr))
    # the chord over three steps is still shorter than three arc steps
    assert per_side == 3
    assert np.all(g.degrees() == 2 * per_side)


def test_graph_structure_invariants(rng):
    A = pairwise_euclidean(PointCloud(rng.uniform(size=(30, 2))))
    g = epsilon_graph(A, 0.4)
    S = g.to_scipy().toarray()
    assert np.array_equal(S, S.T)
    assert np.all(np.diag(S) == 0)
    assert np.all(g.weights > 0)
    for i in range(g.n_nodes):
        nb, _ = g.neighbors(i)
        assert np.all(np.diff(nb) > 0)


def test_sparse_graph_rejects_bad_edges():
    with pytest.raises(InvalidArgumentError):
        SparseGraph.from_edges(3, [0], [0], [1.0])
    with pytest.raises(InvalidArgumentError):
        SparseGraph.from_edges(3, [0], [1], [0.0])


def test_path_graph():
    g = SparseGraph.from_edges(3, [0, 1], [1, 2], [1.0, 1.0])
    for method in ("scipy", "heap"):
        assert all_pairs_shortest_paths(g, method).values[0, 2] == 2.0


def _graph(n, edges):
    ij = np.array(list(edges.keys()))
    return SparseGraph.from_edges(n, ij[:, 0], ij[:, 1], list(edges.values()))


@pytest.mark.parametrize("method", ["scipy", "heap"])
def test_five_node_against_enumeration(method):
    rng = np.random.default_rng(5)
    edges = oracles.random_connected_graph(rng, 5)
    D = all_pairs_shortest_paths(_graph(5, edges), method).values
    np.testing.assert_array_equal(D, oracles.simple_path_distances(5, edges))


def test_square_circle_underestimates_arc():
    c = circle_uniform_grid(4)
    A = pairwise_euclidean(c)
    D = graph_distances(A, np.sqrt(2) * 1.01).values
    # antipodal points are joined by two chords of length sqrt(2)
    assert D[0, 2] == pytest.approx(2 * np.sqrt(2))
    assert D[0, 2] < np.pi


def test_disconnected_error_message():
    X = np.array([[0.0], [0.1], [0.2], [5.0], [5.1], [9.0]])
    A = pairwise_euclidean(PointCloud(X))
    with pytest.raises(DisconnectedGraphError) as info:
        graph_distances(A, 0.5)
    err = info.value
    assert err.n_components == 3
    assert tuple(err.largest) == (3, 2)
    assert err.suggested_threshold == pytest.approx(4.8)
    msg = str(err)
    assert "3 components" in msg and "3 and 2" in msg


def test_connecting_threshold_is_minimal(rng):
    A = pairwise_euclidean(PointCloud(rng.uniform(size=(40, 2))))
    t = connecting_threshold(A)
    graph_distances(A, t)
    with pytest.raises(DisconnectedGraphError):
        graph_distances(A, np.nextafter(t, 0.0))


def test_source_order_does_not_matter(rng):
    edges = oracles.random_connected_graph(rng, 8)
    g = _graph(8, edges)
    a = all_pairs_shortest_paths(g, "heap").values
    b = all_pairs_shortest_paths(g, "heap", sources=rng.permutation(8)).values
    np.testing.assert_array_equal(a, b)


@given(st.integers(0, 2**31 - 1), st.integers(2, 8))
@settings(max_examples=40, deadline=None)
def test_backends_agree_with_enumeration(seed, n):
    rng = np.random.default_rng(seed)
    edges = oracles.random_connected_graph(rng, n)
    ref = oracles.simple_path_distances(n, edges)
    g = _graph(n, edges)
    np.testing.assert_allclose(all_pairs_shortest_paths(g, "heap").values, ref, rtol=1e-15, atol=0)
    np.testing.assert_allclose(all_pairs_shortest_paths(g, "scipy").values, ref, rtol=1e-15, atol=0)


def test_graph_distance_properties():
    c = circle_random(150, 11)
    A = pairwise_euclidean(c)
    G = graph_distances(A, 0.3).values
    assert np.all(G >= A.values - 1e-15)
    rng = np.random.default_rng(0)
    for i, j, k in rng.integers(0, 150, size=(500, 3)):
        assert G[i, k] <= G[i, j] + G[j, k] + 1e-12


def test_circle500_graph_near_arc_length():
    c = circle_uniform_grid(500)
    cfg = FdmConfig(beta=1.0, epsilon=2.0**-12)
    G = geodesic_estimate(c, cfg).values
    dg = oracles.arc_distance(c.intrinsic[:, 0])
    m = dg > 0
    assert np.max(np.abs(G[m] - dg[m]) / dg[m]) < 0.01


def test_analytic_sphere_antipodes():
    c = sphere_icosphere_grid(4)
    cfg = FdmConfig(beta=1.0, epsilon=0.01, dim=2, distance_mode=DistanceMode.ANALYTIC_SPHERE)
    G = geodesic_estimate(c, cfg)
    assert G.kind == DistanceKind.ANALYTIC_GEODESIC
    X = c.ambient
    anti = np.argmin(X @ X.T, axis=1)
    assert np.allclose(X[anti], -X, atol=1e-12)
    np.testing.assert_allclose(G.values[np.arange(len(X)), anti], np.pi, atol=1e-7)


def test_analytic_needs_sphere():
    cfg = FdmConfig(beta=1.0, epsilon=0.01, distance_mode=DistanceMode.ANALYTIC_SPHERE)
    with pytest.raises(InvalidArgumentError):
        geodesic_estimate(circle_uniform_grid(10), cfg)


def test_raw_euclidean_dispatch():
    c = circle_random(20, 2)
    cfg = FdmConfig(beta=1.0, epsilon=0.01, distance_mode=DistanceMode.RAW_EUCLIDEAN)
    np.testing.assert_array_equal(geodesic_estimate(c, cfg).values, pairwise_euclidean(c).values)


def test_binary_round_trip(tmp_path, rng):
    M = rng.normal(size=(7, 7))
    p = tmp_path / "m.fdmd"
    write_matrix_binary(p, M, DistanceKind.GRAPH)
    raw = p.read_bytes()
    assert raw[:4] == b"FDMD"
    assert int.from_bytes(raw[4:8], "little") == 7 and raw[8] == 1
    assert len(raw) == 9 + 8 * 49
    back, kind = read_matrix_binary(p)
    np.testing.assert_array_equal(back, M)
    assert kind == DistanceKind.GRAPH


def test_binary_rejects_garbage(tmp_path):
    p = tmp_path / "bad"
    p.write_bytes(b"XXXX" + bytes(5))
    with pytest.raises(InvalidArgumentError):
        read_matrix_binary(p)


def test_csv_dump(tmp_path, rng):
    M = rng.normal(size=(4, 4))
    p = tmp_path / "m.csv"
    write_matrix_csv(p, M)
    np.testing.assert_array_equal(np.loadtxt(p, delimiter=","), M)


def test_distance_matrix_is_read_only():
    D = DistanceMatrix(np.zeros((2, 2)), DistanceKind.EUCLIDEAN)
    with pytest.raises(ValueError):
        D.values[0, 1] = 1.0
