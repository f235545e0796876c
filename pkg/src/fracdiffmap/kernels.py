"""Local and nonlocal kernel matrices and the Gaussian density estimate."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import BranchMismatchError, InvalidArgumentError, KindMismatchError
from .geodesics import DistanceKind, DistanceMatrix, DistanceMode
from .manifolds import frac_laplacian_constant


@dataclass(frozen=True)
class FdmConfig:
    """Parameters of one fractional diffusion map run.

    Parameters
    ----------
    beta : float in (0, 3]
        Fractional order (beta = 2s).  beta >= 2 selects the local kernel.
    epsilon : float
        Bandwidth, in units of distance squared.
    dim : int
        Intrinsic dimension d of the manifold.
    num_eigs : int
        Number of nontrivial eigenpairs l; l + 1 pairs are returned.
    distance_mode : DistanceMode
        How distances for the nonlocal kernel are obtained.
    graph_threshold : float, optional
        Neighbour-graph threshold; defaults to sqrt(epsilon).
    kde_bandwidth : float, optional
        Bandwidth of the density estimate; defaults to epsilon.
    """

    beta: float
    epsilon: float
    dim: int = 1
    num_eigs: int = 20
    distance_mode: DistanceMode = DistanceMode.GRAPH_DIJKSTRA
    graph_threshold: float | None = None
    kde_bandwidth: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "distance_mode", DistanceMode(self.distance_mode))
        if not 0 < self.beta <= 3:
            raise InvalidArgumentError(f"beta must lie in (0, 3], got {self.beta}")
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidArgumentError(f"dim must be a positive integer, got {self.dim}")
        if int(self.num_eigs) != self.num_eigs or self.num_eigs < 1:
            raise InvalidArgumentError(f"num_eigs must be a positive integer, got {self.num_eigs}")
        for name in ("graph_threshold", "kde_bandwidth"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidArgumentError(f"{name} must be positive, got {v}")
        if self.beta > self.dim + 1:
            warnings.warn(
                f"beta={self.beta} exceeds d+1={self.dim + 1}; no heat kernel of this "
                "order exists on a d-dimensional manifold",
                stacklevel=3,
            )

    @property
    def is_local(self) -> bool:
        return self.beta >= 2

    @property
    def t(self) -> float:
        return self.epsilon ** (self.beta / 2.0)

    @property
    def alpha(self) -> float:
        if not self.is_local:
            raise BranchMismatchError("alpha is only defined on the local branch (beta >= 2)")
        return self.beta / (self.beta - 1.0)

    @property
    def threshold(self) -> float:
        return math.sqrt(self.epsilon) if self.graph_threshold is None else self.graph_threshold

    @property
    def kde_eps(self) -> float:
        return self.epsilon if self.kde_bandwidth is None else self.kde_bandwidth


class KernelFamily(enum.Enum):
    LOCAL = "local"
    NONLOCAL = "nonlocal"


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    values: np.ndarray
    family: KernelFamily
    exponent: float  # alpha for local, d + beta for nonlocal

    @property
    def kind_code(self) -> DistanceKind:
        if self.family == KernelFamily.LOCAL:
            return DistanceKind.LOCAL_KERNEL
        return DistanceKind.NONLOCAL_KERNEL


def local_profile(r, alpha):
    """exp(-r**alpha) for scaled distances r >= 0."""
    return np.exp(-np.power(r, alpha))


def nonlocal_profile(r, exponent):
    """(1 + r)**(-exponent) for scaled distances r >= 0."""
    return np.power(1.0 + r, -exponent)


def local_kernel(dist: DistanceMatrix, config: FdmConfig) -> KernelMatrix:
    """K_ij = exp(-(A_ij / sqrt(eps))**alpha), alpha = beta / (beta - 1)."""
    if not config.is_local:
        raise BranchMismatchError(f"local kernel needs beta >= 2, got {config.beta}")
    if dist.kind != DistanceKind.EUCLIDEAN:
        raise KindMismatchError("the local kernel is built from Euclidean distances")
    alpha = config.alpha
    K = local_profile(dist.values / math.sqrt(config.epsilon), alpha)
    return KernelMatrix(K, KernelFamily.LOCAL, alpha)


def nonlocal_kernel(dist: DistanceMatrix, config: FdmConfig) -> KernelMatrix:
    """K_ij = (1 + G_ij / sqrt(eps))**(-(d + beta)) on geodesic estimates G."""
    if config.is_local:
        raise BranchMismatchError(f"nonlocal kernel needs beta < 2, got {config.beta}")
    if dist.kind not in (DistanceKind.GRAPH, DistanceKind.ANALYTIC_GEODESIC):
        raise KindMismatchError(
            "the nonlocal kernel needs geodesic estimates; Euclidean distances of "
            "embedded data do not give the intrinsic operator"
        )
    exponent = config.dim + config.beta
    K = nonlocal_profile(dist.values / math.sqrt(config.epsilon), exponent)
    return KernelMatrix(K, KernelFamily.NONLOCAL, exponent)


def gaussian_kde(dist: DistanceMatrix, config: FdmConfig) -> np.ndarray:
    """q_i = (2 pi h)^(-d/2) / N * sum_j exp(-A_ij^2 / (2 h)), self term included."""
    if dist.kind != DistanceKind.EUCLIDEAN:
        raise KindMismatchError("the density estimate uses Euclidean distances")
    h = config.kde_eps
    A = dist.values
    N = A.shape[0]
    return (2.0 * np.pi * h) ** (-config.dim / 2.0) / N * np.exp(-(A**2) / (2.0 * h)).sum(axis=1)


def local_moment_ratio(alpha: float, dim: int) -> float:
    """m2 / (2 m0) for the profile exp(-|z|**alpha) on R^dim.

    m0 is the mass and m2 the second moment of one coordinate.  For the
    Gaussian (alpha = 2) this is 1/4 in every dimension.
    """
    return special.gamma((dim + 2.0) / alpha) / (2.0 * dim * special.gamma(dim / alpha))


def nonlocal_tail_ratio(beta: float, dim: int) -> float:
    """A / c_{d, beta/2} for the profile (1 + |z|)**(-(d + beta)).

    A is the tail coefficient of the unit-mass profile and c_{d,s} the
    integral fractional Laplacian constant.  Equals pi/2 for d = 1, beta = 1.
    """
    sphere_area = 2.0 * np.pi ** (dim / 2.0) / special.gamma(dim / 2.0)
    mass = sphere_area * special.beta(dim, beta)
    return 1.0 / (mass * frac_laplacian_constant(dim, beta / 2.0))


def generator_scale(config: FdmConfig) -> float:
    """Analytic factor between -log(eta)/t and the flat-space limit operator.

    Local branch: -log(eta)/t ~ (eps/t) * m2/(2 m0) * mu for a Laplacian
    eigenvalue mu.  Nonlocal branch: -log(eta)/t ~ A/c_{d,s} * mu**(beta/2)
    as t -> 0 on R^d.  On compact manifolds the nonlocal limit differs from
    the spectral fractional Laplacian (the heavy tail is cut at the diameter),
    so there this factor is only indicative.
    """
    if config.is_local:
        return config.epsilon / config.t * local_moment_ratio(config.alpha, config.dim)
    return nonlocal_tail_ratio(config.beta, config.dim)
