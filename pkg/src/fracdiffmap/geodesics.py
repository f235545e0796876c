"""Pairwise distances, threshold neighbour graphs and graph geodesics.

Geodesic distances are estimated by the shortest-path distance through the
graph whose edges join points closer than a threshold.  Two all-pairs
back ends are provided: a per-source binary-heap Dijkstra written here, and
scipy's compiled Dijkstra, which is the default for speed.  Both return the
same distances (see the test-suite cross-checks).
"""

from __future__ import annotations

import enum
import heapq
import struct
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import distance

from .errors import DisconnectedGraphError, InvalidArgumentError
from .manifolds import Manifold, PointCloud, sphere_geodesic_matrix


class DistanceKind(enum.IntEnum):
    """Kind codes; the integer values double as the binary-format kind byte."""

    EUCLIDEAN = 0
    GRAPH = 1
    ANALYTIC_GEODESIC = 2
    LOCAL_KERNEL = 3
    NONLOCAL_KERNEL = 4
    MARKOV = 5


class DistanceMode(enum.Enum):
    GRAPH_DIJKSTRA = "graph"
    ANALYTIC_SPHERE = "analytic-sphere"
    RAW_EUCLIDEAN = "euclidean"


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    kind: DistanceKind

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InvalidArgumentError("distance matrix must be square")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", DistanceKind(self.kind))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Undirected weighted graph in CSR form; neighbour lists sorted by index."""

    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def to_scipy(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (self.weights, self.indices, self.indptr), shape=(self.n_nodes, self.n_nodes)
        )

    @classmethod
    def from_edges(cls, n_nodes, i, j, w):
        """Build from an undirected edge list (each edge listed once)."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        w = np.asarray(w, dtype=float)
        if np.any(i == j):
            raise InvalidArgumentError("self-loops are not allowed")
        if np.any(w <= 0):
            raise InvalidArgumentError("edge weights must be positive")
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        vals = np.concatenate([w, w])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return cls(int(n_nodes), np.cumsum(indptr), cols, vals)


def pairwise_euclidean(cloud: PointCloud) -> DistanceMatrix:
    """A_ij = |x_i - x_j| for the ambient coordinates."""
    X = cloud.ambient if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if X.shape[0] < 2:
        raise InvalidArgumentError("need at least two points")
    A = distance.cdist(X, X)
    A = np.minimum(A, A.T)
    np.fill_diagonal(A, 0.0)
    return DistanceMatrix(A, DistanceKind.EUCLIDEAN)


def epsilon_graph(dist: DistanceMatrix, threshold: float) -> SparseGraph:
    """Graph with an edge (i, j) whenever 0 < A_ij < threshold, weighted by A_ij."""
    if not threshold > 0:
        raise InvalidArgumentError(f"threshold must be positive, got {threshold}")
    if dist.kind != DistanceKind.EUCLIDEAN:
        raise InvalidArgumentError("epsilon_graph expects Euclidean distances")
    A = dist.values
    i, j = np.nonzero(np.triu((A > 0) & (A < threshold), k=1))
    return SparseGraph.from_edges(dist.n, i, j, A[i, j])


def connecting_threshold(dist: DistanceMatrix) -> float:
    """Smallest strict threshold for which :func:`epsilon_graph` is connected.

    This is the next float above the longest edge of a Euclidean minimum
    spanning tree.
    """
    mst = csgraph.minimum_spanning_tree(sparse.csr_matrix(dist.values))
    longest = mst.data.max() if mst.nnz else 0.0
    return float(np.nextafter(longest, np.inf))


def _check_connected(graph: SparseGraph):
    n_comp, labels = csgraph.connected_components(graph.to_scipy(), directed=False)
    if n_comp > 1:
        sizes = np.sort(np.bincount(labels))[::-1]
        raise DisconnectedGraphError(n_comp, (sizes[0], sizes[1]))


def _dijkstra_row(graph: SparseGraph, source: int) -> np.ndarray:
    dist = np.full(graph.n_nodes, np.inf)
    dist[source] = 0.0
    done = np.zeros(graph.n_nodes, dtype=bool)
    heap = [(0.0, source)]
    indptr, indices, weights = graph.indptr, graph.indices, graph.weights
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def all_pairs_shortest_paths(graph: SparseGraph, method: str = "scipy", sources=None) -> DistanceMatrix:
    """Shortest-path distances between all node pairs.

    Parameters
    ----------
    graph : SparseGraph
        Must be connected.
    method : {"scipy", "heap"}
        ``"heap"`` runs the binary-heap Dijkstra in this module from every
        source; ``"scipy"`` uses ``scipy.sparse.csgraph.dijkstra``.
    sources : sequence of int, optional
        Processing order of the sources for the heap back end.  Each run
        writes its own row, so the result does not depend on it.

    Raises
    ------
    DisconnectedGraphError
    """
    _check_connected(graph)
    n = graph.n_nodes
    if method == "scipy":
        D = csgraph.dijkstra(graph.to_scipy(), directed=False)
    elif method == "heap":
        D = np.empty((n, n))
        order = range(n) if sources is None else sources
        for s in order:
            D[s] = _dijkstra_row(graph, int(s))
    else:
        raise InvalidArgumentError(f"unknown shortest-path method {method!r}")
    # the two directions of a path sum the same weights in different orders
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0.0)
    return DistanceMatrix(D, DistanceKind.GRAPH)


def graph_distances(dist: DistanceMatrix, threshold: float, method: str = "scipy") -> DistanceMatrix:
    """Threshold graph plus all-pairs Dijkstra, with a connecting-threshold hint on failure."""
    graph = epsilon_graph(dist, threshold)
    try:
        return all_pairs_shortest_paths(graph, method=method)
    except DisconnectedGraphError as err:
        raise DisconnectedGraphError(
            err.n_components, err.largest, connecting_threshold(dist)
        ) from None


def geodesic_estimate(cloud: PointCloud, config, euclidean: DistanceMatrix | None = None) -> DistanceMatrix:
    """Distances used by the nonlocal kernel, chosen by ``config.distance_mode``."""
    mode = DistanceMode(config.distance_mode)
    if mode == DistanceMode.ANALYTIC_SPHERE:
        if cloud.manifold != Manifold.SPHERE and cloud.ambient_dim != 3:
            raise InvalidArgumentError("analytic sphere geodesics need a cloud on S^2")
        return DistanceMatrix(sphere_geodesic_matrix(cloud.ambient), DistanceKind.ANALYTIC_GEODESIC)
    if euclidean is None:
        euclidean = pairwise_euclidean(cloud)
    if mode == DistanceMode.RAW_EUCLIDEAN:
        return euclidean
    return graph_distances(euclidean, config.threshold)


# ---------------------------------------------------------------------------
# binary matrix format: b"FDMD", u32 N, u8 kind, N*N little-endian float64

MAGIC = b"FDMD"


def write_matrix_binary(path, values, kind) -> None:
    values = np.asarray(values, dtype="<f8")
    n = values.shape[0]
    if values.shape != (n, n):
        raise InvalidArgumentError("only square matrices can be written")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IB", n, int(kind)))
        fh.write(np.ascontiguousarray(values).tobytes())


def read_matrix_binary(path):
    """Return ``(values, kind)``; ``kind`` is a :class:`DistanceKind`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise InvalidArgumentError(f"{path}: bad magic {raw[:4]!r}")
    n, kind = struct.unpack("<IB", raw[4:9])
    body = raw[9:]
    if len(body) != 8 * n * n:
        raise InvalidArgumentError(f"{path}: truncated matrix body")
    values = np.frombuffer(body, dtype="<f8").reshape(n, n).astype(float)
    return values, DistanceKind(kind)


def write_matrix_csv(path, values) -> None:
    np.savetxt(path, np.asarray(values, dtype=float), delimiter=",", fmt="%.17g")
