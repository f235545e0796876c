"""Fractional diffusion maps: heat-kernel estimates of (fractional)
Laplacians from point clouds, with validation and regression tools."""

from .errors import (
    BranchMismatchError,
    DegenerateEigenspaceError,
    DisconnectedGraphError,
    FdmError,
    InvalidArgumentError,
    KindMismatchError,
    ResourceLimitError,
    SpectralFailureError,
)
from .geodesics import (
    DistanceKind,
    DistanceMatrix,
    DistanceMode,
    SparseGraph,
    all_pairs_shortest_paths,
    epsilon_graph,
    graph_distances,
    pairwise_euclidean,
)
from .kernels import FdmConfig, KernelMatrix, gaussian_kde, local_kernel, nonlocal_kernel
from .manifolds import (
    Manifold,
    PointCloud,
    circle_nonuniform_grid,
    circle_random,
    circle_uniform_grid,
    interval_grid,
    sphere_icosphere_grid,
)
from .ridge import cross_validate, expected_regression, indicator_experiment, krr_fit
from .spectral import KernelStack, SpectralResult, run_fdm
from .validation import bandwidth_sweep, interval_comparison, validate

__version__ = "0.1.0"
