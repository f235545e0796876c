"""Slow, independent reference implementations used only by the tests."""

import itertools
import math

import numpy as np
from scipy import integrate


def pairwise_loop(X):
    X = np.asarray(X, dtype=float)
    N = len(X)
    A = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            A[i, j] = math.sqrt(sum((X[i, k] - X[j, k]) ** 2 for k in range(X.shape[1])))
    return A


def simple_path_distances(n, edges):
    """All-pairs shortest distances by enumerating every simple path.

    ``edges`` maps (i, j) with i < j to a weight.  Each path is summed
    from both ends and the smaller floating-point total is kept, so the
    result is symmetric.
    """
    adj = {i: {} for i in range(n)}
    for (i, j), w in edges.items():
        adj[i][j] = w
        adj[j][i] = w
    D = np.full((n, n), np.inf)
    for s in range(n):
        D[s, s] = 0.0

        def walk(u, seen, length):
            for v, w in adj[u].items():
                if v in seen:
                    continue
                total = length + w
                if total < D[s, v]:
                    D[s, v] = total
                walk(v, seen | {v}, total)

        walk(s, {s}, 0.0)
    return np.minimum(D, D.T)


def charpoly_eigenvalues(A):
    """Roots of det(xI - A) via numpy's companion-matrix root finder."""
    roots = np.roots(np.poly(np.asarray(A, dtype=float)))
    return np.sort(roots.real)[::-1]


def kde_loop(X, h, d):
    N = len(X)
    q = np.zeros(N)
    for i in range(N):
        for j in range(N):
            r2 = float(np.sum((X[i] - X[j]) ** 2))
            q[i] += math.exp(-r2 / (2 * h))
    return q * (2 * math.pi * h) ** (-d / 2) / N


def right_normalize_loop(K, q):
    N = len(q)
    out = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            out[i, j] = K[i, j] / (q[i] * q[j])
    return out


def krr_inverse(K, y, delta):
    K = np.asarray(K, dtype=float)
    return np.linalg.inv(K.T @ K + delta * np.eye(len(K))) @ K.T @ y


def regional_pv(x, s=0.5):
    """Regional fractional Laplacian of x^2 on (0, 1) for s = 1/2 by
    principal-value quadrature: c * PV int_0^1 (x^2 - y^2)/|x - y|^2 dy.

    (x^2 - y^2)/(x - y)^2 = (x + y)/(x - y), a Cauchy-type integrand.
    """
    assert s == 0.5
    c = 1.0 / math.pi  # c_{1,1/2}
    # quad's cauchy weight computes PV int f(y)/(y - wvar) dy
    val, _ = integrate.quad(lambda y: -(x + y), 0.0, 1.0, weight="cauchy", wvar=x)
    return c * val


def cosine_coefficient(k):
    val, _ = integrate.quad(lambda x: x * x * math.cos(math.pi * k * x), 0.0, 1.0, limit=200)
    return val / 0.5


def arc_distance(theta):
    d = np.abs(theta[:, None] - theta[None, :])
    return np.minimum(d, 2 * np.pi - d)


def random_connected_graph(rng, n):
    """Random spanning tree plus extra edges, positive weights."""
    edges = {}
    order = rng.permutation(n)
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(0, k)])
        edges[(min(a, b), max(a, b))] = float(rng.uniform(0.1, 5.0))
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) not in edges and rng.random() < 0.3:
            edges[(a, b)] = float(rng.uniform(0.1, 5.0))
    return edges
