"""Error measures against analytic truth: aligned eigenfunction RMSE, Weyl-law
fits, bandwidth sweeps and the interval comparison of regional versus
spectral fractional Laplacians."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateEigenspaceError, DisconnectedGraphError, FdmError, InvalidArgumentError
from .geodesics import DistanceMode, connecting_threshold, pairwise_euclidean
from .kernels import FdmConfig
from .manifolds import (
    Manifold,
    PointCloud,
    circle_basis,
    interval_grid,
    regional_frac_laplacian_half,
    sphere_basis,
    spectral_frac_laplacian_interval,
)
from .spectral import apply_generator, heat_kernel, run_fdm


@dataclass
class EigenspaceGroup:
    indices: list
    alignment: np.ndarray | None = None

    @property
    def multiplicity(self) -> int:
        return len(self.indices)


def group_eigenspaces(true_lambdas, tol: float = 1e-6) -> list:
    """Group consecutive (ascending) eigenvalues lying within ``tol`` of the
    first member of their group."""
    lam = np.asarray(true_lambdas, dtype=float)
    groups = []
    start = 0
    for i in range(1, len(lam) + 1):
        if i == len(lam) or lam[i] - lam[start] > tol:
            groups.append(EigenspaceGroup(list(range(start, i))))
            start = i
    return groups


def align_and_rmse(estimated, truth):
    """Least-squares map M minimising ||estimated @ M - truth||_F and the
    column-wise RMSE of the residual.

    Raises
    ------
    DegenerateEigenspaceError
        If the estimated block is rank deficient.
    """
    E = np.asarray(estimated, dtype=float)
    T = np.asarray(truth, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    if T.ndim == 1:
        T = T[:, None]
    if E.shape != T.shape:
        raise InvalidArgumentError(f"block shapes differ: {E.shape} vs {T.shape}")
    k = E.shape[1]
    if np.linalg.matrix_rank(E) < k:
        raise DegenerateEigenspaceError(f"estimated block of width {k} is rank deficient")
    M, *_ = np.linalg.lstsq(E, T, rcond=None)
    resid = E @ M - T
    return M, np.sqrt(np.mean(resid**2, axis=0))


def eigenfunction_rmse(phi, truth, true_lambdas, tol: float = 1e-6, groups=None):
    """Aligned RMSE of each estimated eigenfunction.

    Groups that would need truth columns beyond ``phi``'s width are dropped,
    so the returned vector can be shorter than ``phi.shape[1]``.
    """
    phi = np.asarray(phi, dtype=float)
    k = min(phi.shape[1], truth.shape[1])
    if groups is None:
        groups = group_eigenspaces(true_lambdas, tol)
    out = []
    for g in groups:
        if g.indices[-1] >= k:
            break
        idx = g.indices
        g.alignment, r = align_and_rmse(phi[:, idx], truth[:, idx])
        out.extend(r)
    return np.array(out)


def collapse_pairs(lambdas) -> np.ndarray:
    """Circle spectrum [l0, l1, l2, ...] -> per-frequency means [(l1+l2)/2, (l3+l4)/2, ...]."""
    lam = np.asarray(lambdas, dtype=float)[1:]
    m = len(lam) // 2
    return lam[: 2 * m].reshape(m, 2).mean(axis=1)


def power_law_fit(lambdas, j_range):
    """OLS slope and r^2 of log(lambda_j) against log(j).

    ``lambdas[k]`` is taken to belong to index j = k + 1; ``j_range`` is an
    inclusive (lo, hi) pair of such indices.
    """
    lo, hi = j_range
    lam = np.asarray(lambdas, dtype=float)
    if lo < 1 or hi > len(lam) or hi <= lo:
        raise InvalidArgumentError(f"index range {j_range} does not fit {len(lam)} eigenvalues")
    j = np.arange(lo, hi + 1)
    y = lam[lo - 1: hi]
    if np.any(~(y > 0)):
        raise InvalidArgumentError("power-law fit needs positive eigenvalues")
    x, ly = np.log(j), np.log(y)
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def truth_for(cloud: PointCloud, count: int, beta: float = 2.0):
    """Analytic eigenfunctions (unit RMS) and eigenvalues for a circle or sphere cloud."""
    if cloud.manifold == Manifold.CIRCLE:
        return circle_basis(cloud.intrinsic[:, 0], count, beta)
    if cloud.manifold == Manifold.SPHERE:
        return sphere_basis(cloud.ambient, count, beta)
    raise InvalidArgumentError(f"no analytic eigenbasis for manifold {cloud.manifold.value}")


@dataclass
class ValidationReport:
    per_eigenfunction_rmse: np.ndarray
    mean_rmse: float
    power_law_slope: float = math.nan
    power_law_r2: float = math.nan

    def count_below(self, threshold: float) -> int:
        return int(np.sum(self.per_eigenfunction_rmse < threshold))


def validate(cloud: PointCloud, result, beta: float, j_range=None, tol: float = 1e-6) -> ValidationReport:
    """RMSE of the nontrivial eigenfunctions and a power-law fit of the spectrum.

    The circle spectrum is fitted against the frequency index (pairs
    collapsed); the sphere spectrum against the eigenvalue index.
    """
    count = result.phi.shape[1]
    # ask for extra truth so the last eigenspace's extent is known
    truth, lam_true = truth_for(cloud, count + 64, beta)
    rmse = eigenfunction_rmse(result.phi, truth, lam_true, tol)[1:]
    slope = r2 = math.nan
    if cloud.manifold == Manifold.CIRCLE:
        spec = collapse_pairs(result.lambda_)
        default = (2, min(50, len(spec)))
    else:
        spec = result.lambda_[1:]
        default = (2, min(100, len(spec)))
    lo, hi = j_range or default
    hi = min(hi, len(spec))
    if hi > lo and np.all(spec[lo - 1: hi] > 0):
        slope, r2 = power_law_fit(spec, (lo, hi))
    mean = float(np.mean(rmse)) if rmse.size else math.nan
    return ValidationReport(rmse, mean, slope, r2)


@dataclass
class SweepRow:
    epsilon: float
    mean_rmse: float = math.nan
    counts: dict = field(default_factory=dict)
    report: ValidationReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _sweep_config(cloud, beta, eps, num_eigs, dim, graph_threshold, distance_mode, euclid):
    thr = graph_threshold
    if graph_threshold == "auto":
        # a merely connecting threshold can leave a chain (a circle minus its
        # widest gap) whose path lengths do not wrap around
        thr = max(math.sqrt(eps), 2.0 * connecting_threshold(euclid)) if beta < 2 else None
    return FdmConfig(beta=beta, epsilon=eps, dim=dim, num_eigs=num_eigs,
                     distance_mode=distance_mode, graph_threshold=thr)


def bandwidth_sweep(
    cloud: PointCloud,
    beta: float,
    epsilons,
    num_eigs: int = 60,
    dim: int = 1,
    thresholds=(0.2, 0.4),
    graph_threshold=None,
    distance_mode=DistanceMode.GRAPH_DIJKSTRA,
):
    """One pipeline run plus validation per bandwidth.

    Runs that fail (e.g. a disconnected neighbour graph) become rows with
    ``error`` set rather than exceptions.

    Parameters
    ----------
    graph_threshold : float, "auto" or None
        None uses sqrt(eps); "auto" uses max(sqrt(eps), twice the smallest
        connecting threshold).
    """
    euclid = pairwise_euclidean(cloud) if graph_threshold == "auto" else None
    rows = []
    for eps in epsilons:
        row = SweepRow(float(eps))
        try:
            cfg = _sweep_config(cloud, beta, eps, num_eigs, dim, graph_threshold, distance_mode, euclid)
            _, res = run_fdm(cloud, cfg)
            rep = validate(cloud, res, beta)
        except (DisconnectedGraphError, FdmError) as err:
            row.error = str(err)
        else:
            row.report = rep
            row.mean_rmse = rep.mean_rmse
            row.counts = {thr: rep.count_below(thr) for thr in thresholds}
        rows.append(row)
    return rows


def write_sweep_csv(rows, path, header_comment: str | None = None) -> None:
    thresholds = sorted({t for r in rows for t in r.counts})
    with open(path, "w") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("epsilon,mean_rmse," + ",".join(f"count_below_{t:g}" for t in thresholds) + ",error\n")
        for r in rows:
            counts = ",".join(str(r.counts.get(t, "")) for t in thresholds)
            err = "" if r.error is None else '"' + r.error.replace('"', "'") + '"'
            fh.write(f"{r.epsilon:.17g},{r.mean_rmse:.17g},{counts},{err}\n")


# ---------------------------------------------------------------------------
# interval [0, 1]

def min_normalize(curve) -> np.ndarray:
    """Scale a curve with negative minimum so that its minimum is exactly -1."""
    curve = np.asarray(curve, dtype=float)
    m = curve.min()
    if not m < 0:
        raise InvalidArgumentError("min-normalisation needs a curve with a negative minimum")
    out = curve / -m
    out[np.argmin(curve)] = -1.0
    return out


@dataclass
class IntervalComparison:
    x: np.ndarray
    fdm: np.ndarray
    regional: np.ndarray
    spectral: np.ndarray

    def l2_distance(self, a, b, lo: float = 0.1, hi: float = 0.9) -> float:
        mask = (self.x >= lo) & (self.x <= hi)
        return float(np.sqrt(np.mean((a[mask] - b[mask]) ** 2)))

    def write_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("x,fdm,regional,spectral\n")
            for row in zip(self.x, self.fdm, self.regional, self.spectral):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def interval_comparison(N: int = 500, epsilon: float = 1e-4, beta: float = 1.0, M: int = 2000,
                        graph_threshold: float | None = None) -> IntervalComparison:
    """Generator estimate (u - H u)/t of u(x) = x^2 on an interval grid next
    to the regional and spectral fractional Laplacians, each scaled so its
    minimum over the interior grid is -1."""
    if beta != 1.0:
        raise InvalidArgumentError("the interval comparison is defined for beta = 1 (s = 1/2)")
    cloud = interval_grid(N)
    cfg = FdmConfig(beta=beta, epsilon=epsilon, dim=1, num_eigs=1, graph_threshold=graph_threshold)
    stack = heat_kernel(cloud, cfg)
    x = cloud.ambient[:, 0]
    est = apply_generator(stack, x**2, cfg.t)
    inner = slice(1, N - 1)
    xi = x[inner]
    return IntervalComparison(
        x=xi,
        fdm=min_normalize(est[inner]),
        regional=min_normalize(regional_frac_laplacian_half(xi)),
        spectral=min_normalize(spectral_frac_laplacian_interval(xi, beta / 2.0, M)),
    )
