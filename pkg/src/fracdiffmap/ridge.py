"""Kernel ridge regression with heat-kernel regularisers.

The regression matrix is the row-stochastic Markov matrix H of the pipeline,
built on the training points.  Held-out points get a row of the same kernel
against the training points, divided by the training density estimates and
normalised to sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import special
from scipy.spatial import distance

from .errors import DisconnectedGraphError, FdmError, InvalidArgumentError
from .geodesics import DistanceKind, DistanceMatrix, DistanceMode
from .kernels import FdmConfig, local_profile, nonlocal_profile
from .manifolds import PointCloud, circle_random
from .spectral import build_kernel, normalize_kernel

EPS_GRID = np.logspace(-3, 0, 16)
DELTA_GRID = np.logspace(-20, -2, 19)
OVERSHOOT_HALF_WIDTH = 0.25
COND_LIMIT = 1e12


def _as_square(K, y):
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidArgumentError(f"K must be square, got shape {K.shape}")
    if y.shape[0] != K.shape[0]:
        raise InvalidArgumentError(f"y has {y.shape[0]} rows but K is {K.shape[0]}x{K.shape[0]}")
    return K, y


def krr_fit(K, y, delta: float):
    """Coefficients c solving (K^T K + delta I) c = K^T y.

    Cholesky on the normal equations when delta is not negligible against
    ||K||^2; otherwise the SVD of K, which keeps the accuracy of the normal
    equations without squaring the condition number.  ``delta = 0`` is
    accepted only when cond(K) < 1e12.
    """
    K, y = _as_square(K, y)
    if delta < 0 or not np.isfinite(delta):
        raise InvalidArgumentError(f"delta must be non-negative, got {delta}")
    if delta == 0:
        s = np.linalg.svd(K, compute_uv=False)
        if not s[-1] > 0 or s[0] / s[-1] >= COND_LIMIT:
            raise InvalidArgumentError("delta = 0 needs a well-conditioned kernel (cond < 1e12)")
        return np.linalg.solve(K, y)
    # ||K||_2^2 <= ||K||_1 ||K||_inf
    bound = np.abs(K).sum(axis=0).max() * np.abs(K).sum(axis=1).max()
    if delta > 1e-8 * bound:
        A = K.T @ K
        A[np.diag_indices_from(A)] += delta
        try:
            return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), K.T @ y)
        except np.linalg.LinAlgError:
            pass
    return RidgePath(K).coefficients(y, delta)


class RidgePath:
    """SVD of K reused across many ridge weights."""

    def __init__(self, K):
        self.U, self.s, self.Vt = np.linalg.svd(np.asarray(K, dtype=float))

    def coefficients(self, y, delta: float):
        filt = self.s / (self.s**2 + delta)
        return self.Vt.T @ (filt * (self.U.T @ y))


def overshoot(theta, yhat, center: float, half_width: float = OVERSHOOT_HALF_WIDTH) -> float:
    """max(yhat) - 1 and -min(yhat) (floored at 0) within a geodesic window."""
    gap = np.abs(np.angle(np.exp(1j * (np.asarray(theta) - center))))
    w = yhat[gap <= half_width]
    if w.size == 0:
        return math.nan
    return float(max(w.max() - 1.0, -w.min(), 0.0))


def indicator(theta):
    """1 on [0, pi], 0 elsewhere, for angles in [0, 2 pi)."""
    t = np.mod(theta, 2 * np.pi)
    return ((t >= 0) & (t <= np.pi)).astype(float)


def make_stream(seed: int, stream: int) -> np.random.Generator:
    """Independent Philox stream number ``stream`` for a given seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def gaussian_noise(N: int, sigma: float, seed: int) -> np.ndarray:
    """sigma * Phi^-1(u) with u uniform on (0, 1) from a seeded Philox stream."""
    u = make_stream(seed, 1).random(N)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return sigma * special.ndtri(u)


def half_split(N: int, seed: int):
    """Random halves; the first (training) half gets the extra point when N is odd."""
    perm = make_stream(seed, 2).permutation(N)
    n_train = (N + 1) // 2
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# ---------------------------------------------------------------------------
# fitted models

@dataclass(eq=False)
class HeatKernelModel:
    """Markov matrix on training points plus what is needed to extend it."""

    train: PointCloud
    config: FdmConfig
    H: np.ndarray
    q_hat: np.ndarray
    geo: DistanceMatrix | None = None

    @classmethod
    def build(cls, train: PointCloud, config: FdmConfig):
        K, q_hat, _, geo = build_kernel(train, config)
        stack = normalize_kernel(K, q_hat)
        return cls(train, config, stack.H, q_hat, geo)

    def _kernel_rows(self, X):
        cfg = self.config
        A = distance.cdist(X, self.train.ambient)
        root = math.sqrt(cfg.epsilon)
        if cfg.is_local:
            return local_profile(A / root, cfg.alpha)
        if cfg.distance_mode != DistanceMode.GRAPH_DIJKSTRA or self.geo.kind != DistanceKind.GRAPH:
            raise InvalidArgumentError("out-of-sample rows are defined for graph geodesics only")
        G = self.geo.values
        thr = cfg.threshold
        D = np.empty_like(A)
        for i in range(len(X)):
            nb = np.flatnonzero(A[i] < thr)
            if nb.size == 0:
                raise DisconnectedGraphError(2, (len(G), 1), float(A[i].min()))
            # attach the new point as a leaf of the training graph
            D[i] = np.min(A[i, nb, None] + G[nb], axis=0)
        return nonlocal_profile(D / root, cfg.dim + cfg.beta)

    def extend(self, X) -> np.ndarray:
        """Row-stochastic kernel block between new points X and the training points."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        R = self._kernel_rows(X) / self.q_hat[None, :]
        s = R.sum(axis=1)
        if np.any(~(s > 0)):
            raise FdmError("a new point has no kernel mass on the training set")
        return R / s[:, None]


# ---------------------------------------------------------------------------
# cross-validation

@dataclass
class CvResult:
    epsilon: float
    delta: float
    table: np.ndarray = field(repr=False)  # (n_eps, n_delta) mean squared held-out error, nan if invalid
    epsilons: np.ndarray = field(repr=False)
    deltas: np.ndarray = field(repr=False)
    errors: dict = field(default_factory=dict, repr=False)

    def write_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("epsilon,delta,cv_mse\n")
            for i, e in enumerate(self.epsilons):
                for j, d in enumerate(self.deltas):
                    fh.write(f"{e:.17g},{d:.17g},{self.table[i, j]:.17g}\n")


def _config(beta, eps, dim, graph_threshold=None):
    return FdmConfig(beta=beta, epsilon=float(eps), dim=dim, num_eigs=1, graph_threshold=graph_threshold)


def cross_validate(cloud: PointCloud, y, beta: float, epsilon_grid=EPS_GRID, delta_grid=DELTA_GRID,
                   seed: int = 0, dim: int = 1) -> CvResult:
    """Single seeded half/half split; held-out mean squared error on every (eps, delta).

    Cells whose kernel cannot be built (e.g. a disconnected training graph)
    are left as nan.  Ties go to the smallest eps, then the smallest delta.
    """
    y = np.asarray(y, dtype=float)
    eps_grid = np.asarray(epsilon_grid, dtype=float)
    delta_grid = np.asarray(delta_grid, dtype=float)
    if eps_grid.size == 0 or delta_grid.size == 0:
        raise InvalidArgumentError("parameter grids must be nonempty")
    if y.shape != (cloud.n_samples,):
        raise InvalidArgumentError("y must have one value per point")
    tr, te = half_split(cloud.n_samples, seed)
    train = cloud.take(tr)
    table = np.full((eps_grid.size, delta_grid.size), np.nan)
    errors = {}
    for i, eps in enumerate(eps_grid):
        try:
            model = HeatKernelModel.build(train, _config(beta, eps, dim))
            B = model.extend(cloud.ambient[te])
        except FdmError as err:
            errors[float(eps)] = str(err)
            continue
        path = RidgePath(model.H)
        for j, delta in enumerate(delta_grid):
            c = path.coefficients(y[tr], delta)
            table[i, j] = np.mean((B @ c - y[te]) ** 2)
    if np.all(np.isnan(table)):
        raise FdmError("every cross-validation cell failed: " + "; ".join(errors.values()))
    # nanargmin scans row-major, i.e. the lexicographic (eps, delta) tie-break
    i, j = np.unravel_index(np.nanargmin(table), table.shape)
    return CvResult(float(eps_grid[i]), float(delta_grid[j]), table, eps_grid, delta_grid, errors)


def expected_regression(cloud: PointCloud, f_true, beta: float, epsilon: float, delta: float, dim: int = 1):
    """Kc with c fitted to the noise-free values f_true on the whole cloud."""
    model = HeatKernelModel.build(cloud, _config(beta, epsilon, dim))
    c = krr_fit(model.H, f_true, delta)
    return model.H @ c


# ---------------------------------------------------------------------------
# indicator experiment

@dataclass
class FamilyResult:
    beta: float
    epsilon: float
    delta: float
    yhat: np.ndarray = field(repr=False)
    overshoot_0: float = math.nan
    overshoot_pi: float = math.nan
    l2_error: float = math.nan
    cv: CvResult | None = field(default=None, repr=False)


@dataclass
class IndicatorExperiment:
    N: int
    sigma: float
    seed: int
    theta: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    families: dict = field(default_factory=dict)

    def write_table(self, path, header_comment: str | None = None) -> None:
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("beta,epsilon,delta,overshoot_0,overshoot_pi,l2_error\n")
            for f in self.families.values():
                fh.write(",".join(f"{v:.17g}" for v in
                                  (f.beta, f.epsilon, f.delta, f.overshoot_0, f.overshoot_pi, f.l2_error)) + "\n")

    def write_curves(self, path) -> None:
        order = np.argsort(self.theta)
        betas = list(self.families)
        with open(path, "w") as fh:
            fh.write("theta,y,f_true," + ",".join(f"yhat_beta{b:g}" for b in betas) + "\n")
            f = indicator(self.theta)
            for k in order:
                vals = [self.theta[k], self.y[k], f[k]] + [self.families[b].yhat[k] for b in betas]
                fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")

    def write_summary(self, path) -> None:
        """Tuned parameters as key=value lines."""
        with open(path, "w") as fh:
            fh.write(f"N={self.N}\nsigma={self.sigma:.17g}\nseed={self.seed}\n")
            for b, f in self.families.items():
                fh.write(f"beta{b:g}.epsilon={f.epsilon:.17g}\nbeta{b:g}.delta={f.delta:.17g}\n")
                fh.write(f"beta{b:g}.overshoot_0={f.overshoot_0:.17g}\n")
                fh.write(f"beta{b:g}.overshoot_pi={f.overshoot_pi:.17g}\n")
                fh.write(f"beta{b:g}.l2_error={f.l2_error:.17g}\n")


def indicator_experiment(N: int, sigma: float, seed: int, betas=(2.0, 1.0),
                         epsilon_grid=EPS_GRID, delta_grid=DELTA_GRID) -> IndicatorExperiment:
    """Noisy samples of 1_[0, pi] on a random circle; per kernel family a
    cross-validated (eps, delta) and the expected regression at those values."""
    if sigma < 0:
        raise InvalidArgumentError(f"sigma must be non-negative, got {sigma}")
    cloud = circle_random(N, seed)
    theta = cloud.intrinsic[:, 0]
    f = indicator(theta)
    y = f + gaussian_noise(N, sigma, seed)
    out = IndicatorExperiment(N, float(sigma), seed, theta, y)
    for beta in betas:
        cv = cross_validate(cloud, y, beta, epsilon_grid, delta_grid, seed)
        yhat = expected_regression(cloud, f, beta, cv.epsilon, cv.delta)
        out.families[float(beta)] = FamilyResult(
            beta=float(beta), epsilon=cv.epsilon, delta=cv.delta, yhat=yhat,
            overshoot_0=overshoot(theta, yhat, 0.0),
            overshoot_pi=overshoot(theta, yhat, np.pi),
            l2_error=float(np.sqrt(np.mean((yhat - f) ** 2))),
            cv=cv,
        )
    return out
