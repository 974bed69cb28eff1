import numpy as np
import pytest

import mcrd as m
from mcrd import Grid


def test_lyapunov_constant_fields_closed_form(grid64, ref_params):
    p = ref_params
    c, d = 1.7, 0.6
    z = np.full(grid64.n_total, c)
    w = np.full(grid64.n_total, d)
    got = m.lyapunov(z, w, grid64, p)
    expected = 0.5 * p.k * d**2 - p.xi * m.G(c, p)
    assert got.total == pytest.approx(expected, abs=1e-12)
    assert got.total == pytest.approx(sum(got.parts.values()), rel=1e-12)


def test_lyapunov_zero_state(grid64, ref_params):
    zero = np.zeros(grid64.n_total)
    assert m.lyapunov(zero, zero, grid64, ref_params).total == 0.0


def test_lyapunov_refinement_is_second_order(ref_params):
    vals = []
    for n in (64, 128, 256):
        g = Grid.interval(n)
        z = 2.0 + 0.5 * np.cos(np.pi * g.x[0])
        w = 1.0 + 0.2 * np.cos(2 * np.pi * g.x[0])
        vals.append(m.lyapunov(z, w, g, ref_params).total)
    # successive differences shrink by ~4x when n doubles
    d1 = abs(vals[1] - vals[0])
    d2 = abs(vals[2] - vals[1])
    assert 2.5 < d1 / d2 < 5.5


def test_j_functional_constant_closed_form(grid64, ref_params):
    p = ref_params
    lam = 3.0
    c = 1.3
    z = np.full(grid64.n_total, c)
    got = m.j_functional(z, grid64, p, lam)
    expected = -m.G(c, p) - p.k * lam * c + 0.5 * p.k * p.xi * c**2
    assert got.total == pytest.approx(expected, abs=1e-12)
    assert m.j_functional(np.zeros(grid64.n_total), grid64, p, 0.0).total == 0.0


def test_j_gradient_matches_symmetric_differences(grid64, ref_params, rng):
    p = ref_params
    lam = 3.0
    eps = 1e-5
    for _ in range(10):
        z = rng.uniform(0.5, 3.0, grid64.n_total)
        phi = rng.normal(size=grid64.n_total)
        directional = grid64.inner(m.j_gradient(z, grid64, p, lam), phi)
        jp = m.j_functional(z + eps * phi, grid64, p, lam).total
        jm = m.j_functional(z - eps * phi, grid64, p, lam).total
        fd = (jp - jm) / (2 * eps)
        assert abs(directional - fd) / max(abs(fd), 1e-30) < 1e-5


def test_j_gradient_vanishes_at_homogeneous_root(grid64, ref_params):
    lam = 3.0
    root = m.homogeneous_roots(ref_params, lam)[0]
    z = np.full(grid64.n_total, root)
    grad = m.j_gradient(z, grid64, ref_params, lam)
    assert grid64.norm(grad) < 1e-10


def test_semi_unfolding_equality_at_average(grid64, ref_params, rng):
    p = ref_params
    z = rng.uniform(0.5, 3.0, grid64.n_total)
    lam_z = p.xi * grid64.integral(z)
    w_bar = 0.9
    lam = lam_z + w_bar * grid64.volume
    w = np.full(grid64.n_total, w_bar)
    rep = m.semi_unfolding_check(z, w, grid64, p, lam)
    assert abs(rep.gap) < 1e-12
    assert rep.identity_error < 1e-10


def test_semi_unfolding_gap_matches_quadratic_identity(grid64, ref_params, rng):
    p = ref_params
    z = rng.uniform(0.5, 3.0, grid64.n_total)
    w = 0.8 + grid64.project_zero_mean(rng.normal(size=grid64.n_total))
    lam = grid64.integral(p.xi * z + w)
    rep = m.semi_unfolding_check(z, w, grid64, p, lam)
    assert rep.gap >= -1e-12
    assert rep.gap == pytest.approx(rep.expected_gap, abs=1e-10)


def test_semi_unfolding_rejects_mass_mismatch(grid64, ref_params, rng):
    z = rng.uniform(0.5, 3.0, grid64.n_total)
    w = rng.uniform(0.5, 1.5, grid64.n_total)
    lam = grid64.integral(ref_params.xi * z + w)
    with pytest.raises(ValueError):
        m.semi_unfolding_check(z, w, grid64, ref_params, lam + 1e-6)
