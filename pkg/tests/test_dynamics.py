import numpy as np
import pytest

import mcrd as m
from mcrd.model import g, to_zw


def equilibrium_state(grid, params, lam):
    root = m.homogeneous_roots(params, lam, volume=grid.volume)[0]
    w_bar = (lam - params.xi * root * grid.volume) / grid.volume
    u = np.full(grid.n_total, (w_bar - root) / (params.D - 1.0))
    v = np.full(grid.n_total, (params.D * root - w_bar) / (params.D - 1.0))
    return m.State(0.0, u, v)


def cosine_state(grid, params, lam, a_u=0.3, a_v=-0.2):
    s = equilibrium_state(grid, params, lam)
    mode = np.cos(np.pi * grid.x[0])
    return m.State(0.0, s.u * (1.0 + a_u * mode), s.v * (1.0 + a_v * mode))


def test_equilibrium_is_fixed_per_step(grid256, ref_params):
    s0 = equilibrium_state(grid256, ref_params, 3.0)
    cfg = m.StepperConfig(dt=0.05, t_end=1.0)
    s1 = m.step(s0, grid256, ref_params, cfg)
    assert np.max(np.abs(s1.u - s0.u)) < 1e-12
    assert np.max(np.abs(s1.v - s0.v)) < 1e-12


def test_zero_state_stays_zero(grid64, ref_params):
    zero = m.State(0.0, np.zeros(grid64.n_total), np.zeros(grid64.n_total))
    cfg = m.StepperConfig(dt=0.1, t_end=1.0)
    traj = m.run(zero, grid64, ref_params, cfg, store_states=False)
    assert traj.rows[-1].mass == 0.0
    assert traj.min_u_run == 0.0 and traj.min_v_run == 0.0


@pytest.mark.parametrize("scheme", ["imex-euler", "imex-cn"])
def test_single_step_mass_conservation(grid256, ref_params, rng, scheme):
    u = rng.uniform(0.5, 4.0, grid256.n_total)
    v = rng.uniform(0.1, 1.0, grid256.n_total)
    s0 = m.State(0.0, u, v)
    cfg = m.StepperConfig(dt=0.05, t_end=1.0, scheme=scheme)
    s1 = m.step(s0, grid256, ref_params, cfg)
    m0 = grid256.integral(s0.u + ref_params.tau * s0.v)
    m1 = grid256.integral(s1.u + ref_params.tau * s1.v)
    assert abs(m1 - m0) < 1e-12 * abs(m0)


def test_run_mass_drift_small(grid256, ref_params):
    s0 = m.initial_state(grid256, ref_params, 3.0, amplitude=0.05, seed=9)
    cfg = m.StepperConfig(dt=0.05, t_end=500.0, output_every=100)
    traj = m.run(s0, grid256, ref_params, cfg, store_states=False)
    mass = traj.column("mass")
    assert np.max(np.abs(mass - mass[0])) / abs(mass[0]) < 1e-11


def test_run_from_equilibrium_keeps_lyapunov_constant(grid256, ref_params):
    s0 = equilibrium_state(grid256, ref_params, 3.0)
    cfg = m.StepperConfig(dt=0.05, t_end=5.0, output_every=10)
    traj = m.run(s0, grid256, ref_params, cfg, store_states=False)
    L = traj.column("lyap")
    assert np.max(np.abs(L - L[0])) < 1e-10


def test_turing_run_settles_to_pattern(grid256, turing_params, turing_lambda):
    s0 = m.initial_state(grid256, turing_params, turing_lambda, amplitude=0.01, seed=11)
    cfg = m.StepperConfig(dt=0.1, t_end=20000.0, output_every=100)
    traj = m.run(s0, grid256, turing_params, cfg, store_states=True,
                 stop_when=lambda r: r.grad_w_inf < 1e-6 and r.z_t_norm < 1e-9)
    assert traj.stopped_early
    last = traj.rows[-1]
    assert last.grad_w_inf < 1e-6
    z_T, _ = to_zw(traj.final.u, traj.final.v, turing_params)
    assert z_T.max() - z_T.min() > 0.5
    # settled runs sit on a stationary profile
    res = m.stationary_residual(z_T, grid256, turing_params, traj.lam)
    assert grid256.norm(res) < 1e-6
    # positivity held throughout
    assert traj.min_u_run >= -1e-8 and traj.min_v_run >= -1e-8
    assert not traj.positivity_violated


def test_dissipation_identity_stationary(grid256, ref_params):
    s0 = equilibrium_state(grid256, ref_params, 3.0)
    cfg = m.StepperConfig(dt=0.05, t_end=1.0, output_every=1)
    traj = m.run(s0, grid256, ref_params, cfg, store_states=True)
    rep = m.dissipation_check(traj, grid256, ref_params)
    assert rep.max_abs_side < 1e-10


def test_dissipation_mismatch_is_first_order(grid256, ref_params):
    def mismatch(dt):
        s0 = cosine_state(grid256, ref_params, 3.0)
        traj = m.run(s0, grid256, ref_params,
                     m.StepperConfig(dt=dt, t_end=1.0, output_every=1),
                     store_states=True)
        return m.dissipation_check(traj, grid256, ref_params)
    r1 = mismatch(0.05)
    r2 = mismatch(0.025)
    assert 1.6 <= r1.max_mismatch / r2.max_mismatch <= 2.4
    assert r1.max_lyap_increase < 1e-8 * 0.05


def test_dissipation_check_needs_two_states(grid64, ref_params):
    s0 = equilibrium_state(grid64, ref_params, 3.0)
    traj = m.Trajectory(lam=3.0, states=[s0])
    with pytest.raises(ValueError):
        m.dissipation_check(traj, grid64, ref_params)


def test_lyapunov_monotone_along_transient(grid256, ref_params):
    s0 = cosine_state(grid256, ref_params, 3.0)
    cfg = m.StepperConfig(dt=0.05, t_end=20.0, output_every=1)
    traj = m.run(s0, grid256, ref_params, cfg, store_states=False)
    L = traj.column("lyap")
    assert np.max(np.diff(L)) < 1e-8 * 0.05


def test_transformed_equations_residuals(grid256, ref_params):
    # the w equation is honored exactly by the scheme; the z equation
    # residual is first order in dt
    p = ref_params

    def residuals(dt):
        s0 = cosine_state(grid256, p, 3.0)
        traj = m.run(s0, grid256, p, m.StepperConfig(dt=dt, t_end=1.0, output_every=1),
                     store_states=True)
        r1 = r2 = 0.0
        for a, b in zip(traj.states[:-1], traj.states[1:]):
            za, wa = to_zw(a.u, a.v, p)
            zb, wb = to_zw(b.u, b.v, p)
            z_t = (zb - za) / dt
            w_t = (wb - wa) / dt
            res1 = z_t - (p.D * grid256.laplacian(zb)
                          + (w_t - p.D * grid256.laplacian(wb) + p.k * wb)
                          + g(zb, p))
            res2 = w_t + p.xi * z_t - p.alpha * grid256.laplacian(wb)
            r1 = max(r1, grid256.norm(res1))
            r2 = max(r2, grid256.norm(res2))
        return r1, r2

    a1, a2 = residuals(0.05)
    b1, b2 = residuals(0.025)
    assert a2 < 1e-9 and b2 < 1e-9
    assert 1.4 <= a1 / b1 <= 2.6


def test_gradient_flow_decreases_j(grid256, turing_params, turing_lambda):
    z0 = m.cosine_seed(grid256, 2.0, 0.05)
    z_fin, ts, js = m.gradient_flow_run(z0, grid256, turing_params, turing_lambda,
                                        dt=0.1, t_end=200.0, record_every=10)
    assert np.max(np.diff(js)) < 1e-8 * 0.1
    assert z_fin.max() - z_fin.min() > 0.5


def test_gradient_flow_step_matches_manual_imex(grid64, ref_params):
    # independent re-derivation of one step, nonlocal term from the current mass
    import scipy.sparse as sp
    from scipy.sparse.linalg import spsolve
    p = ref_params
    lam = 3.0
    rng = np.random.default_rng(4)
    z = rng.uniform(0.5, 3.0, grid64.n_total)
    dt = 0.07
    got = m.gradient_flow_step(z, grid64, p, lam, dt)
    nl = (p.k / grid64.volume) * (lam - p.xi * grid64.integral(z))
    A = sp.identity(grid64.n_total, format="csc") - dt * p.D * grid64.laplacian_matrix
    manual = spsolve(A, z + dt * (g(z, p) + nl))
    assert np.max(np.abs(got - manual)) < 1e-13


def test_positivity_flag_raised_for_negative_data(grid64, ref_params):
    s0 = equilibrium_state(grid64, ref_params, 3.0)
    u = s0.u.copy()
    u[3] = -1e-3
    traj = m.run(m.State(0.0, u, s0.v), grid64, ref_params,
                 m.StepperConfig(dt=0.05, t_end=0.5), store_states=False)
    assert traj.positivity_violated


def test_dt_budget_probe_and_warning(grid64, ref_params):
    s0 = equilibrium_state(grid64, ref_params, 3.0)
    budget = m.dt_budget(s0, ref_params)
    assert 0.0 < budget < np.inf
    with pytest.warns(UserWarning):
        m.run(s0, grid64, ref_params,
              m.StepperConfig(dt=2.0 * budget, t_end=4.0 * budget),
              store_states=False)


def test_divergence_detection(grid64, ref_params):
    s0 = m.initial_state(grid64, ref_params, 3.0, amplitude=0.05, seed=1)
    cfg = m.StepperConfig(dt=100.0, t_end=100000.0, output_every=100)
    with pytest.warns(UserWarning):
        with pytest.raises(FloatingPointError):
            m.run(s0, grid64, ref_params, cfg, store_states=False)


def test_perturb_mass_preserving(grid64, turing_params, turing_lambda):
    s0 = equilibrium_state(grid64, turing_params, turing_lambda)
    pert = m.perturb_mass_preserving(s0, grid64, turing_params, amplitude=1e-3, seed=8)
    m0 = grid64.integral(s0.u + turing_params.tau * s0.v)
    m1 = grid64.integral(pert.u + turing_params.tau * pert.v)
    assert abs(m1 - m0) < 1e-13 * abs(m0)
    assert np.max(np.abs(pert.u - s0.u)) > 1e-5
