import numpy as np
import pytest

from mcrd import Grid


def test_weights_sum_to_volume():
    g = Grid.interval(64)
    assert abs(g.weights.sum() - 1.0) < 1e-13
    g = Grid.interval(200, length=2.5)
    assert abs(g.weights.sum() - 2.5) < 1e-13
    g2 = Grid.rectangle((16, 24), (1.5, 0.5))
    assert abs(g2.weights.sum() - 0.75) < 1e-13


def test_minimum_resolution_enforced():
    with pytest.raises(ValueError):
        Grid.interval(7)


def test_laplacian_of_constant_is_zero(grid64):
    f = np.full(grid64.n_total, 3.7)
    assert np.max(np.abs(grid64.laplacian(f))) < 1e-12


def test_laplacian_matches_analytic_cosine(grid256):
    f = np.cos(np.pi * grid256.x[0])
    err = np.max(np.abs(grid256.laplacian(f) + np.pi**2 * f))
    assert err < 4e-4


def test_laplacian_second_order_convergence():
    errs = []
    for n in (128, 256, 512):
        g = Grid.interval(n)
        f = np.cos(np.pi * g.x[0])
        errs.append(np.max(np.abs(g.laplacian(f) + np.pi**2 * f)))
    for e_coarse, e_fine in zip(errs[:-1], errs[1:]):
        assert 3.5 < e_coarse / e_fine < 4.5


def test_stencil_conservation(grid256, rng):
    f = rng.normal(size=grid256.n_total)
    assert abs(grid256.integral(grid256.laplacian(f))) < 1e-12 * grid256.n_total


def test_mean_and_projection(grid64, rng):
    c = np.full(grid64.n_total, 2.5)
    assert grid64.mean(c) == pytest.approx(2.5, abs=1e-14)
    assert np.max(np.abs(grid64.project_zero_mean(c))) < 1e-13
    f = rng.normal(size=grid64.n_total)
    p = grid64.project_zero_mean(f)
    assert abs(grid64.mean(p)) < 1e-13
    # idempotent
    assert np.max(np.abs(grid64.project_zero_mean(p) - p)) < 1e-13


def test_neumann_eigenpairs(grid256):
    pairs = grid256.neumann_eigenpairs(24)
    eta1, vec1 = pairs[0]
    assert eta1 == 0.0
    assert np.max(np.abs(vec1 - vec1[0])) < 1e-13
    eta2 = pairs[1][0]
    assert abs(eta2 - np.pi**2) / np.pi**2 < 2e-4
    for eta, vec in pairs[:3]:
        res = grid256.laplacian(vec) + eta * vec
        assert np.max(np.abs(res)) < 1e-10
    for eta, vec in pairs[3:]:
        # matvec cancellation noise grows with eta; scale the bound
        res = grid256.laplacian(vec) + eta * vec
        assert np.max(np.abs(res)) < 1e-11 * max(1.0, eta)
    etas = [p[0] for p in pairs]
    assert etas == sorted(etas)


def test_eigenpair_count_validated(grid64):
    with pytest.raises(ValueError):
        grid64.neumann_eigenpairs(grid64.n_total + 1)


def test_inner_product_positivity(grid64, rng):
    f = rng.normal(size=grid64.n_total)
    assert grid64.inner(f, f) > 0
    assert grid64.norm(np.zeros(grid64.n_total)) == 0.0
    with pytest.raises(ValueError):
        grid64.inner(f, np.zeros(grid64.n_total + 1))


def test_summation_by_parts(grid256, rng):
    f = rng.normal(size=grid256.n_total)
    g = rng.normal(size=grid256.n_total)
    a = grid256.inner(-grid256.laplacian(f), g)
    b = grid256.grad_inner(f, g)
    assert abs(a - b) < 1e-12 * max(abs(a), abs(b))
    # quadratic form version
    qa = grid256.inner(-grid256.laplacian(f), f)
    qb = grid256.grad_norm_sq(f)
    assert abs(qa - qb) < 1e-12 * qb


def test_gradient_of_constant_vanishes(grid64):
    c = np.full(grid64.n_total, 1.3)
    assert grid64.grad_norm_sq(c) < 1e-26
    assert grid64.grad_sup(c) < 1e-13


def test_eigenbasis_reconstructs_laplacian(rng):
    g = Grid.interval(64)
    etas, E = g.eigenbasis()
    f = rng.normal(size=g.n_total)
    coeffs = E.T @ (g.weights * f)
    rebuilt = E @ (-etas * coeffs)
    assert np.max(np.abs(rebuilt - g.laplacian(f))) < 1e-9


def test_eigenbasis_weighted_orthonormal(grid64):
    etas, E = grid64.eigenbasis()
    gram = E.T @ (grid64.weights[:, None] * E)
    assert np.max(np.abs(gram - np.eye(grid64.n_total))) < 1e-12


def test_2d_laplacian_and_sbp(rng):
    g = Grid.rectangle((24, 16), (1.0, 1.0))
    X, Y = np.meshgrid(g.x[0], g.x[1], indexing="ij")
    f = (np.cos(np.pi * X) * np.cos(np.pi * Y)).ravel()
    lap = g.laplacian(f)
    assert np.max(np.abs(lap + 2 * np.pi**2 * f)) < 0.1  # coarse grid, O(h^2)
    a = rng.normal(size=g.n_total)
    b = rng.normal(size=g.n_total)
    lhs = g.inner(-g.laplacian(a), b)
    rhs = g.grad_inner(a, b)
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))
    assert abs(g.integral(g.laplacian(a))) < 1e-11 * g.n_total


def test_2d_eigenpairs(rng):
    g = Grid.rectangle((12, 10), (1.0, 0.8))
    for eta, vec in g.neumann_eigenpairs(6):
        res = g.laplacian(vec) + eta * vec
        assert np.max(np.abs(res)) < 1e-9
