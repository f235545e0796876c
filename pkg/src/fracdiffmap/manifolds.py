"""Sample sets on S^1, S^2 and [0, 1] together with their analytic ground truth.

All samplers return immutable :class:`PointCloud` values.  Random clouds use
numpy's Philox4x64-10 counter-based bit generator, so a given seed yields the
same cloud on every platform.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.spatial import distance

from .errors import InvalidArgumentError, ResourceLimitError

MAX_ICOSPHERE_LEVEL = 6


class Manifold(enum.Enum):
    CIRCLE = "circle"
    SPHERE = "sphere"
    INTERVAL = "interval"
    EXTERNAL = "external"


_INTRINSIC_NAMES = {
    Manifold.CIRCLE: ("theta",),
    Manifold.SPHERE: ("theta", "phi"),
    Manifold.INTERVAL: ("theta",),
}


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N samples embedded in R^n.

    Parameters
    ----------
    ambient : (N, n) array
        Embedded coordinates.
    intrinsic : (N, m) array, optional
        Chart coordinates: angle for the circle, (azimuth, polar angle) for
        the sphere, the coordinate itself for the interval.
    manifold : Manifold
    """

    ambient: np.ndarray
    intrinsic: np.ndarray | None = None
    manifold: Manifold = Manifold.EXTERNAL

    def __post_init__(self):
        amb = np.asarray(self.ambient, dtype=float)
        if amb.ndim == 1:
            amb = amb[:, None]
        if amb.ndim != 2:
            raise InvalidArgumentError("ambient coordinates must be a 2-D array")
        object.__setattr__(self, "ambient", _frozen(amb))
        if self.intrinsic is not None:
            intr = np.asarray(self.intrinsic, dtype=float)
            if intr.ndim == 1:
                intr = intr[:, None]
            if intr.shape[0] != amb.shape[0]:
                raise InvalidArgumentError("intrinsic and ambient row counts differ")
            object.__setattr__(self, "intrinsic", _frozen(intr))

    @property
    def n_samples(self) -> int:
        return self.ambient.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.ambient.shape[1]

    def __len__(self):
        return self.n_samples

    def take(self, idx) -> "PointCloud":
        """Sub-cloud with rows ``idx`` (in that order)."""
        idx = np.asarray(idx)
        intr = None if self.intrinsic is None else self.intrinsic[idx]
        return PointCloud(self.ambient[idx], intr, self.manifold)


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator backed by the Philox4x64-10 counter-based bit generator."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _check_n(N, minimum=3):
    if int(N) != N or N < minimum:
        raise InvalidArgumentError(f"need an integer sample count >= {minimum}, got {N!r}")
    return int(N)


def _circle_cloud(theta):
    amb = np.column_stack([np.cos(theta), np.sin(theta)])
    return PointCloud(amb, theta[:, None], Manifold.CIRCLE)


def circle_uniform_grid(N: int) -> PointCloud:
    """Equally spaced angles theta_i = 2*pi*i/N, i = 1..N."""
    N = _check_n(N)
    theta = 2.0 * np.pi * np.arange(1, N + 1) / N
    return _circle_cloud(theta)


def circle_nonuniform_grid(N: int) -> PointCloud:
    """Uniform grid pushed through theta -> theta - sin(theta)/2."""
    N = _check_n(N)
    theta = 2.0 * np.pi * np.arange(1, N + 1) / N
    return _circle_cloud(theta - np.sin(theta) / 2.0)


def circle_random(N: int, seed: int) -> PointCloud:
    """theta_i = 2*pi*r_i with r_i ~ U[0, 1) drawn from a seeded Philox stream."""
    N = _check_n(N)
    r = make_rng(seed).random(N)
    return _circle_cloud(2.0 * np.pi * r)


# Icosahedron with vertices on the unit sphere.
_GOLD = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        [-1, _GOLD, 0], [1, _GOLD, 0], [-1, -_GOLD, 0], [1, -_GOLD, 0],
        [0, -1, _GOLD], [0, 1, _GOLD], [0, -1, -_GOLD], [0, 1, -_GOLD],
        [_GOLD, 0, -1], [_GOLD, 0, 1], [-_GOLD, 0, -1], [-_GOLD, 0, 1],
    ],
    dtype=float,
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def icosphere_mesh(level: int):
    """Vertices and triangular faces of a ``level``-times subdivided icosahedron.

    Every subdivision splits each triangle into four through edge midpoints,
    which are then pushed radially onto the unit sphere.  The first 12
    vertices are always the original icosahedron vertices.

    Returns
    -------
    vertices : (10 * 4**level + 2, 3) array
    faces : (20 * 4**level, 3) int array
    """
    if int(level) != level or level < 0:
        raise InvalidArgumentError(f"level must be a nonnegative integer, got {level!r}")
    if level > MAX_ICOSPHERE_LEVEL:
        raise ResourceLimitError(
            f"icosphere level {level} exceeds the supported maximum {MAX_ICOSPHERE_LEVEL}"
        )
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = _ICO_FACES.copy()
    for _ in range(int(level)):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            idx = cache.get(key)
            if idx is None:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                idx = cache[key] = len(verts) - 1
            return idx

        new_faces = np.empty((4 * len(faces), 3), dtype=np.int64)
        for k, (a, b, c) in enumerate(faces):
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces[4 * k: 4 * k + 4] = ((a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca))
        faces = new_faces
    V = np.array(verts)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    return V, faces


def sphere_angles(X):
    """(azimuth, polar) angles of unit vectors; azimuth in [0, 2*pi)."""
    X = np.asarray(X, dtype=float)
    az = np.mod(np.arctan2(X[:, 1], X[:, 0]), 2.0 * np.pi)
    polar = np.arctan2(np.hypot(X[:, 0], X[:, 1]), X[:, 2])
    return az, polar


def sphere_icosphere_grid(level: int) -> PointCloud:
    """Near-uniform grid of 10 * 4**level + 2 points on S^2.

    Levels 4, 5, 6 give 2562, 10242 and 40962 points.  The ambient rows are
    recomputed from the chart angles so the two agree to rounding.
    """
    V, _ = icosphere_mesh(level)
    az, polar = sphere_angles(V)
    amb = np.column_stack(
        [np.sin(polar) * np.cos(az), np.sin(polar) * np.sin(az), np.cos(polar)]
    )
    return PointCloud(amb, np.column_stack([az, polar]), Manifold.SPHERE)


def interval_grid(N: int) -> PointCloud:
    """x_i = (i - 1)/(N - 1), i = 1..N, endpoints included."""
    N = _check_n(N)
    x = np.linspace(0.0, 1.0, N)
    return PointCloud(x[:, None], x[:, None], Manifold.INTERVAL)


# ---------------------------------------------------------------------------
# analytic truth

def circle_eigenvalue(index: int, beta: float) -> float:
    """Eigenvalue of (-Delta)^(beta/2) on S^1 for the 1-based index used in the
    Fourier ordering 1, sin t, cos t, sin 2t, cos 2t, ..."""
    if index < 1:
        raise InvalidArgumentError("eigen index starts at 1")
    j = index // 2
    return float(j) ** beta if j > 0 else 0.0


def circle_truth(index: int, beta: float):
    """Eigenvalue and eigenfunction for a 1-based Fourier index.

    Index 1 is the constant; indices 2j and 2j+1 are sin(j t) and cos(j t)
    with eigenvalue j**beta.

    Returns
    -------
    lam : float
    func : callable mapping angles to values
    """
    if not 0 < beta <= 3:
        raise InvalidArgumentError(f"beta must lie in (0, 3], got {beta}")
    lam = circle_eigenvalue(index, beta)
    j = index // 2
    if j == 0:
        return lam, lambda th: np.ones_like(np.asarray(th, dtype=float))
    if index % 2 == 0:
        return lam, lambda th: np.sin(j * np.asarray(th, dtype=float))
    return lam, lambda th: np.cos(j * np.asarray(th, dtype=float))


def _unit_rms(B):
    rms = np.sqrt(np.mean(B**2, axis=0))
    return B / rms


def circle_basis(theta, count: int, beta: float = 2.0):
    """First ``count`` Fourier eigenfunctions on ``theta``, unit discrete RMS.

    Returns
    -------
    basis : (N, count) array
    lambdas : (count,) array
    """
    theta = np.asarray(theta, dtype=float).ravel()
    cols, lams = [], []
    for idx in range(1, count + 1):
        lam, f = circle_truth(idx, beta)
        cols.append(f(theta))
        lams.append(lam)
    return _unit_rms(np.column_stack(cols)), np.array(lams)


def _real_harmonic(l, m, az, polar):
    # scipy >= 1.15 argument order: (degree, order, polar, azimuth)
    if hasattr(special, "sph_harm_y"):
        Y = special.sph_harm_y(l, abs(m), polar, az)
    else:  # pragma: no cover - older scipy
        Y = special.sph_harm(abs(m), l, az, polar)
    if m > 0:
        return np.sqrt(2.0) * Y.real
    if m < 0:
        return np.sqrt(2.0) * Y.imag
    return Y.real


def sphere_basis(X, count: int, beta: float = 2.0):
    """Real spherical harmonics ordered by degree, unit discrete RMS.

    Eigenvalues are (l(l+1))**(beta/2).  Only whole degree blocks are useful
    for eigenspace alignment; ``count`` may cut the last block.
    """
    az, polar = sphere_angles(X)
    cols, lams = [], []
    l = 0
    while len(cols) < count:
        for m in range(-l, l + 1):
            if len(cols) == count:
                break
            cols.append(_real_harmonic(l, m, az, polar))
            lams.append(float(l * (l + 1)) ** (beta / 2.0))
        l += 1
    return _unit_rms(np.column_stack(cols)), np.array(lams)


def sphere_geodesic(x, y) -> float:
    """Great-circle distance between two unit vectors, in [0, pi]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for v in (x, y):
        if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise InvalidArgumentError("sphere_geodesic needs unit 3-vectors")
    # atan2 form equals arccos(x.y) on the sphere but keeps precision near 0 and pi
    return float(np.arctan2(np.linalg.norm(np.cross(x, y)), np.clip(x @ y, -1.0, 1.0)))


def sphere_geodesic_matrix(X) -> np.ndarray:
    """Pairwise great-circle distances for rows of X (unit vectors)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 3:
        raise InvalidArgumentError("expected an (N, 3) array")
    if np.max(np.abs(np.linalg.norm(X, axis=1) - 1.0)) > 1e-9:
        raise InvalidArgumentError("points are not on the unit sphere")
    # 2 arcsin(chord/2) equals arccos(x.y) on the sphere without the loss of
    # precision arccos has for nearby points
    chord = distance.cdist(X, X)
    G = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))
    G = np.minimum(G, G.T)
    np.fill_diagonal(G, 0.0)
    return G


def frac_laplacian_constant(n: int, s: float) -> float:
    """Normalisation c_{n,s} of the integral fractional Laplacian on R^n."""
    return (
        s * 2.0 ** (2 * s) * special.gamma((n + 2 * s) / 2.0)
        / (np.pi ** (n / 2.0) * special.gamma(1.0 - s))
    )


def regional_frac_laplacian_half(x):
    """Regional fractional Laplacian of u(x) = x^2 on [0, 1] with s = 1/2.

    Closed form c_{1,1/2} * (-1 + 2 x log(x / (1 - x))), valid for 0 < x < 1.
    """
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise InvalidArgumentError("regional_frac_laplacian_half is defined on the open interval (0, 1)")
    return frac_laplacian_constant(1, 0.5) * (-1.0 + 2.0 * x * np.log(x / (1.0 - x)))


def neumann_coefficient(u, k: int) -> float:
    """<u, cos(pi k x)> / ||cos(pi k x)||^2 on [0, 1] by adaptive quadrature."""
    norm2 = 1.0 if k == 0 else 0.5
    val, _ = integrate.quad(lambda x: u(x) * np.cos(np.pi * k * x), 0.0, 1.0, limit=200)
    return val / norm2


def _square_coefficients(M):
    # integral of x^2 cos(pi k x) over [0, 1] is 2 (-1)^k / (pi k)^2
    k = np.arange(1, M + 1)
    return 4.0 * (-1.0) ** k / (np.pi * k) ** 2


def spectral_frac_laplacian_interval(x, s: float, M: int, coefficients=None):
    """Truncated spectral fractional Laplacian of u(x) = x^2 with Neumann modes.

    Sums lambda_k^s * u_k * cos(pi k x) for k = 1..M with lambda_k = (pi k)^2.

    Parameters
    ----------
    x : array
    s : float in (0, 1)
    M : int
        Number of modes.
    coefficients : array, optional
        Override for u_1..u_M (default: exact coefficients of x^2).
    """
    if not 0 < s < 1:
        raise InvalidArgumentError("s must lie in (0, 1)")
    if M < 1:
        raise InvalidArgumentError("M must be >= 1")
    x = np.asarray(x, dtype=float)
    uk = _square_coefficients(M) if coefficients is None else np.asarray(coefficients, dtype=float)
    k = np.arange(1, M + 1)
    weights = (np.pi * k) ** (2 * s) * uk
    out = np.zeros(x.shape)
    # chunk over modes to bound memory at large M
    for start in range(0, M, 256):
        sl = slice(start, start + 256)
        out += np.cos(np.pi * np.multiply.outer(x, k[sl])) @ weights[sl]
    return out


# ---------------------------------------------------------------------------
# CSV

def write_cloud_csv(cloud: PointCloud, path) -> None:
    """One header row ``x1,...,xn[,theta...]`` then one sample per line (17 sig. digits)."""
    names = [f"x{i + 1}" for i in range(cloud.ambient_dim)]
    data = cloud.ambient
    if cloud.intrinsic is not None:
        names += list(_INTRINSIC_NAMES.get(cloud.manifold, [f"theta{i + 1}" for i in range(cloud.intrinsic.shape[1])]))
        data = np.hstack([data, cloud.intrinsic])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _infer_manifold(amb, intr):
    if intr is None:
        return Manifold.EXTERNAL
    norms = np.linalg.norm(amb, axis=1)
    if amb.shape[1] == 2 and intr.shape[1] == 1 and np.allclose(norms, 1.0, atol=1e-12):
        return Manifold.CIRCLE
    if amb.shape[1] == 3 and intr.shape[1] == 2 and np.allclose(norms, 1.0, atol=1e-12):
        return Manifold.SPHERE
    if amb.shape[1] == 1 and np.array_equal(amb, intr) and amb.min() >= 0 and amb.max() <= 1:
        return Manifold.INTERVAL
    return Manifold.EXTERNAL


def read_cloud_csv(path, manifold: Manifold | None = None) -> PointCloud:
    """Read a cloud written by :func:`write_cloud_csv` (or any ``x1..xn`` CSV)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidArgumentError(f"{path}: empty file") from None
        rows = [[float(v) for v in r] for r in reader if r]
    header = [h.strip() for h in header]
    amb_cols = [i for i, h in enumerate(header) if h.startswith("x")]
    int_cols = [i for i, h in enumerate(header) if not h.startswith("x")]
    if not amb_cols or not rows:
        raise InvalidArgumentError(f"{path}: no coordinate columns or no rows")
    data = np.array(rows, dtype=float)
    amb = data[:, amb_cols]
    intr = data[:, int_cols] if int_cols else None
    if manifold is None:
        manifold = _infer_manifold(amb, intr)
    return PointCloud(amb, intr, manifold)
