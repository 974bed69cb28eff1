import numpy as np
import pytest

import mcrd as m
from mcrd.model import g, reaction


def test_zero_mass_has_zero_root(ref_params):
    roots = m.homogeneous_roots(ref_params, 0.0)
    assert roots and abs(roots[0]) < 1e-12


def test_homogeneous_root_residual(ref_params):
    lam = 3.0
    for root in m.homogeneous_roots(ref_params, lam):
        res = g(root, ref_params) + ref_params.k * (lam - ref_params.xi * root)
        assert abs(res) < 1e-12


def test_newton_from_root_is_immediate(grid64, ref_params):
    lam = 3.0
    root = m.homogeneous_roots(ref_params, lam)[0]
    st = m.newton_solve(np.full(grid64.n_total, root), grid64, ref_params, lam, tol=1e-10)
    assert st.iterations <= 1
    assert st.residual_norm < 1e-12


def test_newton_polishes_settled_profile(grid256, turing_params, turing_lambda):
    st = m.newton_solve(m.cosine_seed(grid256, 2.0, 1.5), grid256, turing_params,
                        turing_lambda, tol=1e-11)
    assert st.residual_norm < 1e-11
    assert st.z_star.max() - st.z_star.min() > 1.0  # genuinely patterned
    # w_bar definition and the conserved-mass relation
    w_expected = (st.lam - turing_params.xi * grid256.integral(st.z_star)) / grid256.volume
    assert st.w_bar == pytest.approx(w_expected, abs=1e-12)
    assert grid256.integral(turing_params.xi * st.z_star + st.w_bar) == pytest.approx(st.lam, abs=1e-10)


def test_newton_quadratic_convergence(grid256, turing_params, turing_lambda):
    base = m.newton_solve(m.cosine_seed(grid256, 2.0, 1.5), grid256, turing_params,
                          turing_lambda, tol=1e-12)
    z0 = base.z_star + 0.05 * np.cos(np.pi * grid256.x[0]) + 0.03
    st = m.newton_solve(z0, grid256, turing_params, turing_lambda,
                        tol=1e-13, damped=False, max_iter=30)
    h = st.residual_history
    tail = [r for r in h if r > 1e-13][-3:]
    for r_prev, r_next in zip(tail[:-1], tail[1:]):
        assert r_next <= 100.0 * r_prev**2


def test_newton_divergence_without_damping(grid256, turing_params, turing_lambda):
    z_far = 40.0 + 30.0 * np.cos(np.pi * grid256.x[0])
    with pytest.raises(m.SolverError):
        m.newton_solve(z_far, grid256, turing_params, turing_lambda,
                       tol=1e-12, damped=False, max_iter=12)


def test_newton_is_gradient_flow_fixed_point(grid256, turing_params, turing_lambda):
    st = m.newton_solve(m.cosine_seed(grid256, 2.0, 1.5), grid256, turing_params,
                        turing_lambda, tol=1e-12)
    z_next = m.gradient_flow_step(st.z_star, grid256, turing_params, turing_lambda, 0.1)
    assert np.max(np.abs(z_next - st.z_star)) < 1e-10


def test_reconstruct_homogeneous(grid64, ref_params):
    lam = 3.0
    root = m.homogeneous_roots(ref_params, lam)[0]
    st = m.newton_solve(np.full(grid64.n_total, root), grid64, ref_params, lam)
    u, v = m.reconstruct_uv(st, ref_params)
    assert np.max(np.abs(reaction(u, v, ref_params))) < 1e-10
    assert np.max(np.abs(u + v - st.z_star)) < 1e-13
    assert np.max(np.abs(ref_params.D * u + v - st.w_bar)) < 1e-12


def test_reconstruct_patterned_identities(grid256, turing_params, turing_lambda):
    st = m.newton_solve(m.cosine_seed(grid256, 2.0, 1.5), grid256, turing_params,
                        turing_lambda, tol=1e-11)
    u, v = m.reconstruct_uv(st, turing_params)
    assert np.max(np.abs(u + v - st.z_star)) < 1e-13
    assert np.max(np.abs(turing_params.D * u + v - st.w_bar)) < 1e-12
    assert u.min() > -1e-8 and v.min() > -1e-8


def test_limit_tau1_constant_solution(grid64, turing_params):
    lam_hat = 2.0
    z0 = np.full(grid64.n_total, lam_hat / grid64.volume)
    t1 = m.limit_tau1_solve(z0, grid64, turing_params, lam_hat, tol=1e-12)
    assert t1.iterations == 0
    assert np.max(np.abs(t1.z_star - lam_hat)) < 1e-12


def test_limit_tau1_nonconstant_solution(grid256, turing_params):
    lam_hat = 2.0
    t1 = m.limit_tau1_solve(m.cosine_seed(grid256, 2.0, 1.5), grid256, turing_params,
                            lam_hat, tol=1e-12)
    assert t1.z_star.max() - t1.z_star.min() > 1.0
    mult = t1.mu + grid256.integral(g(t1.z_star, turing_params)) / grid256.volume
    assert abs(mult) < 1e-10
    assert abs(grid256.integral(t1.z_star) - lam_hat) < 1e-12
