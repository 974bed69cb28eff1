"""The invariant suite: one callable check per acceptance property.

Each criterion returns a CriterionResult with the measured numbers, so the
same engine backs both `rdcli verify` and the test suite.  Expensive
artifacts (the endurance run, the settled patterning run, the polished
stationary profile and its spectra) are built once per context and shared.

All runs use the 1D unit interval at n = 256.  Tolerances are fixed here,
not configurable: they are the contract.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import presets
from .dynamics import (
    State,
    StepperConfig,
    dissipation_check,
    initial_state,
    perturb_mass_preserving,
    run,
)
from .energy import j_functional, j_gradient, semi_unfolding_check
from .grid import Grid
from .model import g, to_zw
from .reporting import (
    spectrum_report_dict,
    write_digests,
    write_json,
    write_profile_csv,
    write_timeseries_csv,
)
from .spectra import (
    hessian_eigs,
    mu_curve,
    negative_eigs_by_fixed_point,
    spectral_comparison_report,
)
from .stationary import cosine_seed, limit_tau1_solve, newton_solve, reconstruct_uv

__all__ = ["CriterionResult", "VerifyContext", "CRITERIA", "run_all"]

N_NODES = 256
S_GRID = np.linspace(0.2, 10.0, 50)
J_MAX = 6


@dataclass
class CriterionResult:
    cid: str
    title: str
    passed: bool
    details: dict
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.cid} {status}  {self.title}"


class VerifyContext:
    """Lazily built shared artifacts for the criteria."""

    def __init__(self, seed: int = 7):
        self.seed = seed
        self.grid = Grid.interval(N_NODES)
        self.ref = presets.reference_params()
        self.ref_lam = presets.reference_lambda()
        self.tur = presets.turing_params()
        self.tur_lam = presets.turing_lambda()
        self._cache: dict = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- shared runs -------------------------------------------------------

    def endurance_run(self):
        """Reference preset, 1e5 steps; also times the run."""

        def build():
            s0 = initial_state(self.grid, self.ref, self.ref_lam,
                               amplitude=0.1, seed=self.seed)
            cfg = StepperConfig(dt=0.05, t_end=5000.0, output_every=500,
                                seed=self.seed, amplitude=0.1)
            t0 = time.perf_counter()
            traj = run(s0, self.grid, self.ref, cfg, store_states=True)
            return traj, time.perf_counter() - t0

        return self._get("endurance", build)

    def turing_run(self):
        """Patterning preset run to settled state; times the run."""

        def build():
            s0 = initial_state(self.grid, self.tur, self.tur_lam,
                               amplitude=0.01, seed=self.seed + 1)
            cfg = StepperConfig(dt=0.1, t_end=20000.0, output_every=100,
                                seed=self.seed + 1, amplitude=0.01)
            t0 = time.perf_counter()
            traj = run(s0, self.grid, self.tur, cfg, store_states=True,
                       stop_when=lambda r: r.grad_w_inf < 1e-6 and r.z_t_norm < 1e-9)
            return traj, time.perf_counter() - t0

        return self._get("turing_run", build)

    def patterned(self):
        """Newton polish of the settled patterning run."""

        def build():
            traj, _ = self.turing_run()
            z_T, _ = to_zw(traj.final.u, traj.final.v, self.tur)
            return newton_solve(z_T, self.grid, self.tur, traj.lam, tol=1e-11)

        return self._get("patterned", build)

    def homogeneous_profile(self, which: str):
        def build():
            from .stationary import homogeneous_roots

            p, lam = ((self.ref, self.ref_lam) if which == "reference"
                      else (self.tur, self.tur_lam))
            z_bar = homogeneous_roots(p, lam, volume=self.grid.volume)[0]
            return np.full(self.grid.n_total, z_bar), z_bar

        return self._get(f"homog_{which}", build)

    def report(self, which: str):
        def build():
            if which == "patterned":
                st = self.patterned()
                rep = spectral_comparison_report(st.z_star, self.grid, self.tur,
                                                 w_bar=st.w_bar)
                st.morse_index = rep.morse_L
                return rep
            z, _ = self.homogeneous_profile(which)
            p = self.ref if which == "reference" else self.tur
            return spectral_comparison_report(z, self.grid, p)

        return self._get(f"report_{which}", build)

    def stability_run(self):
        """Perturbed patterned state relaxing back (criterion 13)."""

        def build():
            st = self.patterned()
            u_s, v_s = reconstruct_uv(st, self.tur)
            pert = perturb_mass_preserving(State(0.0, u_s, v_s), self.grid, self.tur,
                                           amplitude=1e-3, seed=self.seed + 2)
            cfg = StepperConfig(dt=0.1, t_end=150.0, output_every=50,
                                seed=self.seed + 2, amplitude=1e-3)
            traj = run(pert, self.grid, self.tur, cfg, store_states=True)
            return traj, st

        return self._get("stability", build)

    def cosine_transient(self, dt: float):
        """Smooth deterministic transient for the dissipation-order check."""
        from .stationary import homogeneous_roots

        key = ("transient", dt)

        def build():
            p, lam = self.ref, self.ref_lam
            z_bar = homogeneous_roots(p, lam, volume=self.grid.volume)[0]
            w_bar = (lam - p.xi * z_bar * self.grid.volume) / self.grid.volume
            u_bar = (w_bar - z_bar) / (p.D - 1.0)
            v_bar = (p.D * z_bar - w_bar) / (p.D - 1.0)
            mode = np.cos(np.pi * self.grid.x[0])
            s0 = State(0.0, u_bar * (1.0 + 0.3 * mode), v_bar * (1.0 - 0.2 * mode))
            cfg = StepperConfig(dt=dt, t_end=1.0, output_every=1)
            traj = run(s0, self.grid, self.ref, cfg, store_states=True)
            return dissipation_check(traj, self.grid, self.ref)

        return self._get(key, build)

    def suite_runs(self):
        """(name, trajectory, params) triples every per-run criterion scans."""
        out = [("reference", self.endurance_run()[0], self.ref),
               ("turing", self.turing_run()[0], self.tur)]
        traj13, _ = self.stability_run()
        out.append(("stability", traj13, self.tur))
        return out


# -- criteria ---------------------------------------------------------------

def c01_mass_conservation(ctx: VerifyContext) -> CriterionResult:
    traj, elapsed = ctx.endurance_run()
    mass = traj.column("mass")
    drift = float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))
    passed = drift < 1e-10 and elapsed < 30.0
    return CriterionResult(
        "C01", "mass conservation over 1e5 steps", passed,
        {"relative_drift": drift, "bound": 1e-10, "elapsed_s": elapsed,
         "runtime_bound_s": 30.0, "steps": 100000},
    )


def c02_positivity(ctx: VerifyContext) -> CriterionResult:
    mins = {}
    for name, traj, _ in ctx.suite_runs():
        mins[f"min_u_{name}"] = traj.min_u_run
        mins[f"min_v_{name}"] = traj.min_v_run
    worst = min(mins.values())
    return CriterionResult(
        "C02", "positivity from nonnegative data", worst >= -1e-8,
        {**mins, "worst": worst, "bound": -1e-8},
    )


def c03_lyapunov_decrease(ctx: VerifyContext) -> CriterionResult:
    worst_excess = -np.inf
    for name, traj, _ in ctx.suite_runs():
        L = traj.column("lyap")
        t = traj.column("t")
        # tolerance 1e-8 * dt per step, compounded over each record interval
        excess = np.diff(L) - 1e-8 * np.diff(t)
        worst_excess = max(worst_excess, float(np.max(excess)))
    r1 = ctx.cosine_transient(0.05)
    r2 = ctx.cosine_transient(0.025)
    ratio = r1.max_mismatch / r2.max_mismatch
    passed = worst_excess <= 0.0 and 1.6 <= ratio <= 2.4
    return CriterionResult(
        "C03", "Lyapunov decrease and first-order dissipation identity", passed,
        {"worst_increase_minus_tol": worst_excess,
         "mismatch_dt": r1.max_mismatch, "mismatch_dt_half": r2.max_mismatch,
         "halving_ratio": float(ratio), "ratio_window": [1.6, 2.4]},
    )


def c04_semi_unfolding(ctx: VerifyContext) -> CriterionResult:
    worst_margin = np.inf
    worst_identity = 0.0
    for name, traj, p in ctx.suite_runs():
        for st in traj.states:
            z, w = to_zw(st.u, st.v, p)
            rep = semi_unfolding_check(z, w, ctx.grid, p, traj.lam, mass_tol=1e-6)
            worst_margin = min(worst_margin, rep.lyap - rep.xi_j_plus_const)
            worst_identity = max(worst_identity, rep.identity_error)
    passed = worst_margin >= -1e-10 and worst_identity <= 1e-10
    return CriterionResult(
        "C04", "semi-unfolding inequality at every snapshot", passed,
        {"worst_margin": float(worst_margin), "margin_bound": -1e-10,
         "worst_identity_error": float(worst_identity), "identity_bound": 1e-10},
    )


def c05_convergence(ctx: VerifyContext) -> CriterionResult:
    traj, elapsed = ctx.turing_run()
    st = ctx.patterned()
    z_T, _ = to_zw(traj.final.u, traj.final.v, ctx.tur)
    dist = ctx.grid.norm(z_T - st.z_star)
    grad_w = traj.rows[-1].grad_w_inf
    nonconstant = float(st.z_star.max() - st.z_star.min())
    passed = (grad_w < 1e-6 and st.residual_norm < 1e-10 and dist < 1e-6
              and nonconstant > 0.1 and elapsed < 120.0)
    return CriterionResult(
        "C05", "patterning run settles onto a stationary profile", passed,
        {"grad_w_inf": grad_w, "newton_residual": st.residual_norm,
         "terminal_distance_L2": dist, "pattern_range": nonconstant,
         "elapsed_s": elapsed, "t_final": traj.rows[-1].t},
    )


def c06_gradient(ctx: VerifyContext) -> CriterionResult:
    rng = np.random.default_rng(ctx.seed + 3)
    eps = 1e-5
    worst = 0.0
    for _ in range(10):
        z = rng.uniform(0.5, 3.0, ctx.grid.n_total)
        phi = rng.normal(size=ctx.grid.n_total)
        grad = j_gradient(z, ctx.grid, ctx.ref, ctx.ref_lam)
        directional = ctx.grid.inner(grad, phi)
        jp = j_functional(z + eps * phi, ctx.grid, ctx.ref, ctx.ref_lam).total
        jm = j_functional(z - eps * phi, ctx.grid, ctx.ref, ctx.ref_lam).total
        fd = (jp - jm) / (2.0 * eps)
        worst = max(worst, abs(directional - fd) / max(abs(fd), 1e-30))
    return CriterionResult(
        "C06", "variational gradient matches finite differences", worst < 1e-5,
        {"worst_relative_error": float(worst), "bound": 1e-5, "eps": eps},
    )


def c07_homogeneous_oracle(ctx: VerifyContext) -> CriterionResult:
    from .model import g_prime

    t0 = time.perf_counter()
    etas, _ = ctx.grid.eigenbasis()
    details = {}
    worst_L = 0.0
    worst_A = 0.0
    for which, p in (("reference", ctx.ref), ("turing", ctx.tur)):
        z, z_bar = ctx.homogeneous_profile(which)
        gp = g_prime(z_bar, p)
        vals, _ = hessian_eigs(z, ctx.grid, p)
        pred = p.D * etas - gp
        pred[0] += p.k * p.xi
        err_L = float(np.max(np.abs(np.sort(vals) - np.sort(pred))))

        rep = ctx.report(which)
        r = p.xi / p.alpha
        M2 = np.array([[1.0 + p.D * r, -r], [p.xi, 1.0]])
        oracle = [(p.k * p.xi - gp) / (p.tau * p.alpha)]
        for eta in etas[1:]:
            A2 = np.array([[p.D * eta - gp, -p.k], [0.0, p.alpha * eta]])
            oracle.extend(np.linalg.eigvals(np.linalg.solve(M2, A2)))
        err_A = float(np.max(np.abs(np.sort_complex(np.array(oracle, dtype=complex))
                                    - rep.eigs_A)))
        details[f"hessian_err_{which}"] = err_L
        details[f"pencil_err_{which}"] = err_A
        worst_L = max(worst_L, err_L)
        worst_A = max(worst_A, err_A)
    elapsed = time.perf_counter() - t0
    passed = worst_L < 1e-10 and worst_A < 1e-8 and elapsed < 10.0
    details.update({"hessian_bound": 1e-10, "pencil_bound": 1e-8,
                    "elapsed_s": elapsed, "runtime_bound_s": 10.0})
    return CriterionResult("C07", "homogeneous closed-form spectral oracle", passed, details)


def c08_realness(ctx: VerifyContext) -> CriterionResult:
    details = {}
    ok = True
    for which in ("reference", "turing", "patterned"):
        rep = ctx.report(which)
        details[f"violations_{which}"] = len(rep.realness_violations)
        details[f"threshold_{which}"] = rep.real_threshold
        ok = ok and not rep.realness_violations
    return CriterionResult(
        "C08", "realness below alpha k/(2 xi) on every stationary state", ok, details,
    )


def c09_morse_coincidence(ctx: VerifyContext) -> CriterionResult:
    details = {}
    ok = True
    for which, expect_unstable in (("reference", False), ("turing", True),
                                   ("patterned", False)):
        rep = ctx.report(which)
        match = rep.morse_A == rep.morse_L and rep.zero_A == rep.zero_L
        details[which] = {"morse_L": rep.morse_L, "morse_A": rep.morse_A,
                          "zero_L": rep.zero_L, "zero_A": rep.zero_A,
                          "hypothesis": rep.hypothesis, "match": match}
        ok = ok and match and rep.hypothesis
        if which == "reference":
            ok = ok and rep.morse_L == 0
        if which == "turing":
            ok = ok and rep.morse_L >= 1
        if expect_unstable is False and which == "patterned":
            ok = ok and rep.morse_L == 0
    return CriterionResult("C09", "Morse index and zero-count coincidence", ok, details)


def c10_fixed_point(ctx: VerifyContext) -> CriterionResult:
    details = {}
    ok = True
    for which in ("turing", "patterned"):
        rep = ctx.report(which)
        z = (ctx.homogeneous_profile("turing")[0] if which == "turing"
             else ctx.patterned().z_star)
        fp = negative_eigs_by_fixed_point(z, ctx.grid, ctx.tur)
        neg_A = np.sort(rep.eigs_A.real[(rep.eigs_A.real < -rep.zero_tol)])
        if len(fp.sigmas) != len(neg_A) or fp.morse_L != rep.morse_L:
            ok = False
            err = np.inf
        else:
            err = float(np.max(np.abs(np.array(fp.sigmas) - neg_A))) if fp.sigmas else 0.0
            ok = ok and err < 1e-6
        details[which] = {"count": len(fp.sigmas), "morse_L": fp.morse_L,
                          "sigmas": fp.sigmas, "direct": neg_A.tolist(),
                          "max_abs_err": err}
    return CriterionResult(
        "C10", "fixed-point recovery of the negative pencil spectrum", ok, details,
    )


def c11_mu_monotonicity(ctx: VerifyContext) -> CriterionResult:
    """Literal check: every curve nonincreasing, negative mu/s strictly increasing.

    The first clause fails on any state carrying a negative curve: under
    xi eta2 > k the mode weights grow with s, so negative curves rise
    toward zero.  The failure is reported, not masked; the README's
    "Known red" section carries the analysis.
    """
    details = {}
    ok = True
    for which in ("reference", "turing"):
        z, _ = ctx.homogeneous_profile(which)
        p = ctx.ref if which == "reference" else ctx.tur
        table = mu_curve(z, ctx.grid, p, S_GRID, J_MAX)
        dmu = np.diff(table.mu, axis=0)
        worst_increase = float(dmu.max())
        nonincreasing = bool((dmu <= 1e-10).all())
        strict_ok = True
        neg_curves = []
        for j in range(table.mu.shape[1]):
            if (table.mu[:, j] < 0).all():
                q = np.diff(table.mu[:, j] / table.s)
                neg_curves.append(j + 1)
                strict_ok = strict_ok and bool((q > 1e-10).all())
        details[which] = {"nonincreasing": nonincreasing,
                          "worst_curve_increase": worst_increase,
                          "negative_curves": neg_curves,
                          "mu_over_s_strictly_increasing": strict_ok,
                          "rayleigh_max_err": table.rayleigh_max_err}
        ok = ok and nonincreasing and strict_ok
    return CriterionResult(
        "C11", "monotonicity of the weighted eigenvalue curves", ok, details,
    )


def c12_tau1_limit(ctx: VerifyContext) -> CriterionResult:
    lam_hat = 2.0
    t1 = limit_tau1_solve(cosine_seed(ctx.grid, 2.0, 1.5), ctx.grid, ctx.tur,
                          lambda_hat=lam_hat, tol=1e-12)
    mult_err = abs(t1.mu + ctx.grid.integral(g(t1.z_star, ctx.tur)) / ctx.grid.volume)
    cons_err = abs(ctx.grid.integral(t1.z_star) - lam_hat)
    nonconstant = float(t1.z_star.max() - t1.z_star.min())
    passed = mult_err < 1e-10 and cons_err < 1e-12
    return CriterionResult(
        "C12", "equal-timescale limit problem", passed,
        {"multiplier_identity_error": float(mult_err), "multiplier_bound": 1e-10,
         "constraint_error": float(cons_err), "constraint_bound": 1e-12,
         "pattern_range": nonconstant, "j_hat": t1.j_hat, "mu": t1.mu},
    )


def c13_stability(ctx: VerifyContext) -> CriterionResult:
    traj, st = ctx.stability_run()
    z_T, w_T = to_zw(traj.final.u, traj.final.v, ctx.tur)
    dz = ctx.grid.norm(z_T - st.z_star)
    dw = ctx.grid.norm(w_T - st.w_bar)
    dist = float(np.hypot(dz, dw))
    L = traj.column("lyap")
    L_excess = float(np.max(L - L[0]))
    passed = dist < 1e-4 and L_excess <= 1e-8
    return CriterionResult(
        "C13", "perturbed local minimum relaxes back", passed,
        {"final_distance": dist, "distance_bound": 1e-4,
         "max_L_minus_L0": L_excess, "L_bound": 1e-8},
    )


CRITERIA = [
    c01_mass_conservation,
    c02_positivity,
    c03_lyapunov_decrease,
    c04_semi_unfolding,
    c05_convergence,
    c06_gradient,
    c07_homogeneous_oracle,
    c08_realness,
    c09_morse_coincidence,
    c10_fixed_point,
    c11_mu_monotonicity,
    c12_tau1_limit,
    c13_stability,
]


def run_all(out_dir: Path | None = None, seed: int = 7, echo=None) -> list[CriterionResult]:
    """Run every criterion; optionally write the artifact set into out_dir."""
    ctx = VerifyContext(seed=seed)
    results = []
    for fn in CRITERIA:
        t0 = time.perf_counter()
        res = fn(ctx)
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if echo is not None:
            echo(res.line())
    if out_dir is not None:
        _write_artifacts(ctx, results, Path(out_dir))
    return results


def _write_artifacts(ctx: VerifyContext, results, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    ref_traj, _ = ctx.endurance_run()
    tur_traj, _ = ctx.turing_run()
    stab_traj, _ = ctx.stability_run()
    write_timeseries_csv(out_dir / "reference_timeseries.csv", ref_traj.rows)
    write_timeseries_csv(out_dir / "turing_timeseries.csv", tur_traj.rows)
    write_timeseries_csv(out_dir / "stability_timeseries.csv", stab_traj.rows)
    st = ctx.patterned()
    u_s, v_s = reconstruct_uv(st, ctx.tur)
    write_profile_csv(out_dir / "patterned_profile.csv", ctx.grid, u_s, v_s, ctx.tur)
    for which in ("reference", "turing", "patterned"):
        rep = ctx.report(which)
        write_json(out_dir / f"spectrum_{which}.json", spectrum_report_dict(rep))
    mu_rows = []
    z, _ = ctx.homogeneous_profile("turing")
    table = mu_curve(z, ctx.grid, ctx.tur, S_GRID, J_MAX)
    for i, s in enumerate(table.s):
        mu_rows.append([s, *table.mu[i]])
    from .reporting import write_csv

    write_csv(out_dir / "mu_curves_turing.csv",
              ["s", *[f"mu_{j + 1}" for j in range(table.mu.shape[1])]], mu_rows)
    write_json(out_dir / "criteria.json",
               [{"cid": r.cid, "title": r.title, "passed": r.passed,
                 "details": r.details, "seconds": r.seconds} for r in results])
    write_digests(out_dir)
