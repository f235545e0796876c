import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fracdiffmap.errors import InvalidArgumentError, ResourceLimitError
from fracdiffmap.manifolds import (
    Manifold,
    circle_basis,
    circle_eigenvalue,
    circle_nonuniform_grid,
    circle_random,
    circle_truth,
    circle_uniform_grid,
    frac_laplacian_constant,
    icosphere_mesh,
    interval_grid,
    neumann_coefficient,
    read_cloud_csv,
    regional_frac_laplacian_half,
    sphere_basis,
    sphere_geodesic,
    sphere_geodesic_matrix,
    sphere_icosphere_grid,
    spectral_frac_laplacian_interval,
    write_cloud_csv,
)


def test_uniform_grid_n4():
    c = circle_uniform_grid(4)
    np.testing.assert_allclose(c.intrinsic[:, 0], [np.pi / 2, np.pi, 3 * np.pi / 2, 2 * np.pi])
    amb = c.ambient
    assert np.any(np.all(np.isclose(amb, [1, 0], atol=1e-15), axis=1))
    assert np.any(np.all(np.isclose(amb, [-1, 0], atol=1e-15), axis=1))


@pytest.mark.parametrize("sampler", [circle_uniform_grid, circle_nonuniform_grid, interval_grid])
def test_too_few_points(sampler):
    with pytest.raises(InvalidArgumentError):
        sampler(2)


def test_circle_random_needs_three():
    with pytest.raises(InvalidArgumentError):
        circle_random(2, 0)


@given(st.integers(3, 400))
@settings(max_examples=30, deadline=None)
def test_circle_cloud_invariants(N):
    for c in (circle_uniform_grid(N), circle_nonuniform_grid(N), circle_random(N, N)):
        assert c.manifold == Manifold.CIRCLE and c.ambient_dim == 2
        assert np.max(np.abs(np.linalg.norm(c.ambient, axis=1) - 1)) < 1e-12
        th = c.intrinsic[:, 0]
        np.testing.assert_allclose(c.ambient, np.column_stack([np.cos(th), np.sin(th)]), atol=1e-12)


def test_nonuniform_map_points():
    c = circle_nonuniform_grid(8)
    th = c.intrinsic[:, 0]
    # theta_4 = pi is a fixed point, theta_2 = pi/2 maps to pi/2 - 1/2
    assert th[3] == pytest.approx(np.pi)
    assert th[1] == pytest.approx(np.pi / 2 - 0.5)


def test_nonuniform_grid_monotone():
    th = circle_nonuniform_grid(500).intrinsic[:, 0]
    assert np.all(np.diff(th) > 0)


def test_random_determinism():
    a, b = circle_random(50, 3), circle_random(50, 3)
    np.testing.assert_array_equal(a.ambient, b.ambient)
    assert not np.array_equal(a.ambient, circle_random(50, 4).ambient)


@pytest.mark.parametrize("seed", [0, 1, 7, 12345])
def test_random_mean_small(seed):
    assert np.linalg.norm(circle_random(500, seed).ambient.mean(axis=0)) < 0.2


def test_random_uses_philox():
    r = np.random.Generator(np.random.Philox(9)).random(10)
    np.testing.assert_array_equal(circle_random(10, 9).intrinsic[:, 0], 2 * np.pi * r)


@pytest.mark.parametrize("level,N", [(0, 12), (1, 42), (2, 162), (3, 642), (4, 2562)])
def test_icosphere_sizes(level, N):
    c = sphere_icosphere_grid(level)
    assert c.n_samples == N == 10 * 4**level + 2
    assert np.max(np.abs(np.linalg.norm(c.ambient, axis=1) - 1)) < 1e-12
    az, polar = c.intrinsic.T
    amb = np.column_stack([np.sin(polar) * np.cos(az), np.sin(polar) * np.sin(az), np.cos(polar)])
    np.testing.assert_allclose(c.ambient, amb, atol=1e-12)


def test_icosphere_level_limit():
    with pytest.raises(ResourceLimitError):
        icosphere_mesh(7)


def test_icosphere_six_neighbours():
    V, faces = icosphere_mesh(4)
    nbrs = [set() for _ in range(len(V))]
    for f in faces:
        for a in f:
            nbrs[a].update(int(b) for b in f if b != a)
    deg = np.array([len(s) for s in nbrs])
    assert np.all(deg[:12] == 5)
    assert np.all(deg[12:] == 6)


def test_interval_grid():
    np.testing.assert_array_equal(interval_grid(3).ambient[:, 0], [0, 0.5, 1])
    x = interval_grid(101).ambient[:, 0]
    np.testing.assert_allclose(np.diff(x), 0.01, atol=1e-15)
    assert x[0] == 0 and x[-1] == 1


def test_circle_truth_values():
    assert circle_truth(2, 2)[0] == 1 and circle_truth(3, 2)[0] == 1
    assert circle_truth(6, 0.5)[0] == pytest.approx(math.sqrt(3))
    lam, f = circle_truth(1, 1.3)
    assert lam == 0 and np.all(f(np.linspace(0, 6, 7)) == 1)


@given(st.floats(0.1, 3.0))
def test_circle_eigenvalues_nondecreasing(beta):
    lam = [circle_eigenvalue(i, beta) for i in range(1, 40)]
    assert lam[0] == 0
    assert np.all(np.diff(lam) >= 0)


def test_circle_pair_orthogonality():
    th = circle_uniform_grid(500).intrinsic[:, 0]
    for j in range(1, 125):
        assert abs(np.sum(np.sin(j * th) * np.cos(j * th))) < 1e-8


def test_circle_basis_unit_rms():
    B, lam = circle_basis(circle_random(200, 1).intrinsic[:, 0], 11, 2.0)
    np.testing.assert_allclose(np.sqrt(np.mean(B**2, axis=0)), 1.0)
    np.testing.assert_array_equal(lam, [0, 1, 1, 4, 4, 9, 9, 16, 16, 25, 25])


def test_sphere_basis_is_eigenbasis():
    X = sphere_icosphere_grid(3).ambient
    B, lam = sphere_basis(X, 16, 2.0)
    np.testing.assert_array_equal(lam, [0, 2, 2, 2, 6, 6, 6, 6, 6, 12, 12, 12, 12, 12, 12, 12])
    # degree 2 harmonics span the traceless quadratics
    x, y, z = X.T
    Q = np.column_stack([x * y, y * z, x * z, x * x - y * y, 3 * z * z - 1])
    coef, *_ = np.linalg.lstsq(Q, B[:, 4:9], rcond=None)
    assert np.max(np.abs(Q @ coef - B[:, 4:9])) < 1e-12
    assert np.linalg.matrix_rank(B[:, 4:9]) == 5


def test_sphere_basis_first_degree_is_coordinates():
    X = sphere_icosphere_grid(2).ambient
    B, _ = sphere_basis(X, 4)
    # real l = 1 harmonics are the coordinate functions up to scale and order
    coef, res, *_ = np.linalg.lstsq(X, B[:, 1:], rcond=None)
    assert np.max(np.abs(X @ coef - B[:, 1:])) < 1e-12


def test_sphere_geodesic_examples():
    e1, e2 = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    assert sphere_geodesic(e1, e1) == 0
    assert sphere_geodesic(e1, -e1) == pytest.approx(np.pi)
    assert sphere_geodesic(e1, e2) == pytest.approx(np.pi / 2)
    with pytest.raises(InvalidArgumentError):
        sphere_geodesic(np.array([1.0, 1, 0]), e2)


def test_sphere_geodesic_matrix_matches_arccos():
    X = sphere_icosphere_grid(1).ambient
    G = sphere_geodesic_matrix(X)
    ref = np.arccos(np.clip(X @ X.T, -1, 1))
    np.testing.assert_allclose(G, ref, atol=1e-7)
    for i in range(0, 42, 7):
        for j in range(0, 42, 5):
            assert G[i, j] == pytest.approx(sphere_geodesic(X[i], X[j]), abs=1e-14)


def test_chord_versus_arc_expansion():
    th = circle_uniform_grid(500).intrinsic[:, 0]
    dg = oracles.arc_distance(th)
    chord = 2 * np.sin(dg / 2)
    m = (dg > 0) & (dg < 0.3)
    C = np.max(np.abs(chord[m] - dg[m]) / dg[m] ** 3)
    assert C <= 0.1
    assert C == pytest.approx(1 / 24, rel=0.01)


def test_frac_constant_half():
    assert frac_laplacian_constant(1, 0.5) == pytest.approx(1 / np.pi)


def test_regional_closed_form():
    c = 1 / np.pi
    assert regional_frac_laplacian_half(0.5) == pytest.approx(-c)
    assert regional_frac_laplacian_half(0.25) == pytest.approx(c * (-1 + 0.5 * np.log(1 / 3)))
    assert regional_frac_laplacian_half(1 - 1e-12) > 1e9 * 0 + 5
    with pytest.raises(InvalidArgumentError):
        regional_frac_laplacian_half(0.0)
    with pytest.raises(InvalidArgumentError):
        regional_frac_laplacian_half(1.0)


@pytest.mark.parametrize("x", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_regional_matches_pv_quadrature(x):
    assert regional_frac_laplacian_half(x) == pytest.approx(oracles.regional_pv(x), abs=1e-6)


@pytest.mark.parametrize("k", [1, 2, 3, 10])
def test_neumann_coefficients(k):
    ref = oracles.cosine_coefficient(k)
    assert neumann_coefficient(lambda x: x * x, k) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(4 * (-1) ** k / (np.pi * k) ** 2, abs=1e-12)


def test_spectral_truncation_converged():
    x = np.linspace(0, 1, 500)
    x = x[(x >= 0.05) & (x <= 0.95)]
    a = spectral_frac_laplacian_interval(x, 0.5, 500)
    b = spectral_frac_laplacian_interval(x, 0.5, 2000)
    assert np.max(np.abs(a - b)) < 1e-3


def test_spectral_constant_function():
    x = np.linspace(0, 1, 11)
    out = spectral_frac_laplacian_interval(x, 0.5, 50, coefficients=np.zeros(50))
    assert np.all(out == 0)
    assert all(abs(neumann_coefficient(lambda t: 3.0, k)) < 1e-14 for k in (1, 2, 5))


def test_spectral_closed_form_s_half():
    # sum_k (pi k) * 4 (-1)^k/(pi k)^2 cos(pi k x) = -(4/pi) log(2 cos(pi x / 2))
    x = np.array([0.2, 0.4, 0.5, 0.6])
    ref = -(4 / np.pi) * np.log(2 * np.cos(np.pi * x / 2))
    np.testing.assert_allclose(spectral_frac_laplacian_interval(x, 0.5, 200000), ref, atol=2e-5)


def test_spectral_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        spectral_frac_laplacian_interval([0.5], 1.0, 10)
    with pytest.raises(InvalidArgumentError):
        spectral_frac_laplacian_interval([0.5], 0.5, 0)


@pytest.mark.parametrize("make", [lambda: circle_random(20, 5), lambda: sphere_icosphere_grid(1),
                                  lambda: interval_grid(9)])
def test_csv_round_trip(tmp_path, make):
    c = make()
    p = tmp_path / "c.csv"
    write_cloud_csv(c, p)
    header = p.read_text().splitlines()[0]
    assert header.startswith("x1")
    back = read_cloud_csv(p)
    np.testing.assert_array_equal(back.ambient, c.ambient)
    np.testing.assert_array_equal(back.intrinsic, c.intrinsic)
    assert back.manifold == c.manifold


def test_point_cloud_read_only():
    c = circle_uniform_grid(5)
    with pytest.raises(ValueError):
        c.ambient[0, 0] = 3.0
