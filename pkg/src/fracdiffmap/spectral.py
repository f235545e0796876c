"""Right/left normalisation, the symmetric eigenproblem, and the full pipeline."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import InvalidArgumentError, SpectralFailureError
from .geodesics import DistanceMatrix, geodesic_estimate, pairwise_euclidean
from .kernels import FdmConfig, KernelMatrix, gaussian_kde, generator_scale, local_kernel, nonlocal_kernel
from .manifolds import PointCloud

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class KernelStack:
    """K -> K_tilde = D^-1 K D^-1 -> H = D_tilde^-1 K_tilde and its symmetric twin K_hat."""

    K: KernelMatrix
    D: np.ndarray
    K_tilde: np.ndarray
    D_tilde: np.ndarray
    H: np.ndarray
    K_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Leading eigenpairs of the heat-kernel estimate.

    Attributes
    ----------
    eta : (l+1,) semigroup eigenvalues, descending, in (0, 1]
    lambda_ : (l+1,) generator eigenvalues -log(eta)/t, ascending
    lambda_hat : (l+1,) -log(eta)/epsilon
    lambda_normalized : (l+1,) lambda_ divided by the analytic generator scale
    psi : (N, l+1) orthonormal eigenvectors of K_hat
    phi : (N, l+1) eigenfunction estimates D_tilde^-1/2 psi, unit RMS columns
    t, epsilon, scale : floats
    """

    eta: np.ndarray
    lambda_: np.ndarray
    lambda_hat: np.ndarray
    lambda_normalized: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    t: float
    epsilon: float
    scale: float


def right_normalize(K, q_hat) -> np.ndarray:
    """K_tilde_ij = K_ij / (q_i q_j)."""
    K = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    q = np.asarray(q_hat, dtype=float)
    if q.shape != (K.shape[0],):
        raise InvalidArgumentError("density vector length does not match the kernel")
    if np.any(~(q > 0)):
        raise InvalidArgumentError("density estimate must be strictly positive")
    inv = 1.0 / q
    return inv[:, None] * K * inv[None, :]


def left_normalize(K_tilde):
    """Row-normalise K_tilde.

    Returns
    -------
    H : row-stochastic D_tilde^-1 K_tilde
    K_hat : D_tilde^-1/2 K_tilde D_tilde^-1/2, averaged with its transpose
    D_tilde : row sums of K_tilde
    """
    K_tilde = np.asarray(K_tilde, dtype=float)
    D_tilde = K_tilde.sum(axis=1)
    if np.any(~(D_tilde > 0)):
        raise InvalidArgumentError("kernel has a row with zero (or non-finite) sum")
    H = K_tilde / D_tilde[:, None]
    s = 1.0 / np.sqrt(D_tilde)
    K_hat = s[:, None] * K_tilde * s[None, :]
    K_hat = (K_hat + K_hat.T) / 2.0
    return H, K_hat, D_tilde


def eig_top(K_hat, count: int, method: str = "auto"):
    """Largest ``count`` eigenpairs of a symmetric matrix.

    Dense problems (N <= 4096) go through LAPACK's symmetric driver
    (Householder tridiagonalisation, then eigenvalues in the requested index
    range).  Larger ones use ARPACK's restarted Lanczos with tolerance 1e-12
    and at most 10 N iterations.

    Returns
    -------
    eta : (count,) descending eigenvalues
    psi : (N, count) orthonormal eigenvectors
    """
    A = np.asarray(K_hat, dtype=float)
    N = A.shape[0]
    if A.ndim != 2 or A.shape[1] != N:
        raise InvalidArgumentError("eig_top needs a square matrix")
    if not 1 <= count <= N:
        raise InvalidArgumentError(f"cannot request {count} eigenpairs of a {N}x{N} matrix")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise InvalidArgumentError("eig_top needs a symmetric matrix")
    if method == "auto":
        method = "dense" if (N <= DENSE_LIMIT or count >= N - 1) else "lanczos"
    if method == "dense":
        w, V = scipy.linalg.eigh(A, subset_by_index=[N - count, N - 1], driver="evr")
    elif method == "lanczos":
        w, V = scipy.sparse.linalg.eigsh(A, k=count, which="LA", tol=1e-12, maxiter=10 * N)
    else:
        raise InvalidArgumentError(f"unknown eigensolver {method!r}")
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def _fix_signs(V):
    V = V.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        if nz.size and col[nz[0]] < 0:
            V[:, k] = -col
    return V


def postprocess(eta, psi, D_tilde, t: float, epsilon: float | None = None, scale: float = 1.0) -> SpectralResult:
    """Generator eigenvalues and eigenfunction estimates from the symmetric eigenpairs.

    lambda_i = -log(eta_i)/t and phi_i = psi_i / sqrt(D_tilde), rescaled to unit
    discrete RMS with the first nonzero entry positive.  eta slightly above 1
    (rounding) is clamped to 1.
    """
    eta = np.asarray(eta, dtype=float)
    if np.any(~(eta > 0)):
        raise SpectralFailureError(
            "non-positive semigroup eigenvalue; the kernel is too narrow or numerically singular"
        )
    eta = np.minimum(eta, 1.0)
    minus_log = -np.log(eta)
    psi = _fix_signs(np.asarray(psi, dtype=float))
    phi = psi / np.sqrt(np.asarray(D_tilde, dtype=float))[:, None]
    phi = phi / np.sqrt(np.mean(phi**2, axis=0))
    eps = t if epsilon is None else epsilon
    lam = minus_log / t
    return SpectralResult(
        eta=eta,
        lambda_=lam,
        lambda_hat=minus_log / eps,
        lambda_normalized=lam / scale,
        psi=psi,
        phi=phi,
        t=float(t),
        epsilon=float(eps),
        scale=float(scale),
    )


def build_kernel(cloud: PointCloud, config: FdmConfig, euclidean: DistanceMatrix | None = None):
    """Distances, kernel and density estimate for one cloud.

    Returns
    -------
    K : KernelMatrix
    q_hat : (N,) density estimate
    euclidean : DistanceMatrix
    geodesic : DistanceMatrix or None (local branch)
    """
    if euclidean is None:
        euclidean = pairwise_euclidean(cloud)
    q_hat = gaussian_kde(euclidean, config)
    if config.is_local:
        return local_kernel(euclidean, config), q_hat, euclidean, None
    geo = geodesic_estimate(cloud, config, euclidean)
    return nonlocal_kernel(geo, config), q_hat, euclidean, geo


def normalize_kernel(K: KernelMatrix, q_hat) -> KernelStack:
    K_tilde = right_normalize(K, q_hat)
    H, K_hat, D_tilde = left_normalize(K_tilde)
    return KernelStack(K=K, D=np.asarray(q_hat), K_tilde=K_tilde, D_tilde=D_tilde, H=H, K_hat=K_hat)


def heat_kernel(cloud: PointCloud, config: FdmConfig) -> KernelStack:
    """Every step of the pipeline up to (but excluding) the eigensolve."""
    K, q_hat, _, _ = build_kernel(cloud, config)
    return normalize_kernel(K, q_hat)


def run_fdm(cloud: PointCloud, config: FdmConfig, method: str = "auto"):
    """Fractional diffusion map of a point cloud.

    Distances, kernel (local if beta >= 2, else nonlocal on geodesic
    estimates), Gaussian density estimate, both normalisations, then the
    top l + 1 eigenpairs.

    Returns
    -------
    stack : KernelStack
    result : SpectralResult
    """
    count = config.num_eigs + 1
    if count > cloud.n_samples:
        raise InvalidArgumentError(
            f"requested {count} eigenpairs from a cloud of {cloud.n_samples} points"
        )
    stack = heat_kernel(cloud, config)
    eta, psi = eig_top(stack.K_hat, count, method=method)
    result = postprocess(eta, psi, stack.D_tilde, config.t, config.epsilon, generator_scale(config))
    log.debug(
        "fdm %s branch: N=%d beta=%g eps=%g lambda_1=%g",
        "local" if config.is_local else "nonlocal", cloud.n_samples, config.beta,
        config.epsilon, result.lambda_[1] if count > 1 else float("nan"),
    )
    return stack, result


def apply_generator(stack: KernelStack, f, t: float) -> np.ndarray:
    """(f - H f) / t, the pointwise generator estimate."""
    f = np.asarray(f, dtype=float)
    return (f - stack.H @ f) / t


def write_spectrum_csv(result: SpectralResult, eigenvalues_path, eigenfunctions_path) -> None:
    """``eigenvalues.csv`` (index, eta, lambda, lambda_hat, lambda_normalized) and
    ``eigenfunctions.csv`` (N rows, l+1 columns)."""
    with open(eigenvalues_path, "w") as fh:
        fh.write("index,eta,lambda,lambda_hat,lambda_normalized\n")
        for i, row in enumerate(zip(result.eta, result.lambda_, result.lambda_hat, result.lambda_normalized)):
            fh.write(f"{i}," + ",".join(f"{v:.17g}" for v in row) + "\n")
    k = result.phi.shape[1]
    np.savetxt(
        eigenfunctions_path, result.phi, delimiter=",", fmt="%.17g",
        header=",".join(f"phi{i}" for i in range(k)), comments="",
    )
