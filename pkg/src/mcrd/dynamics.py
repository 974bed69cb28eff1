"""Time integration of the conserved pair with conservation-exact IMEX schemes.

Diffusion is treated implicitly (backward Euler or Crank-Nicolson per
config) and the reaction explicitly.  The single explicit reaction value
r = h(u + v) + k v is added to the u equation and subtracted, scaled by
1/tau, in the v equation, so the discrete total mass sum_i w_i (u + tau v)
is invariant to roundoff at every step by construction.  Positivity is
monitored, never enforced: clipping would silently break conservation.

Runs record a monitor row per output step (total mass, nodewise minima,
Lyapunov and variational energies, sup norm of grad w, and the L2 norm of
the z difference quotient) and optionally keep the full states so the
dissipation identity can be checked afterwards.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import identity as sp_identity
from scipy.sparse.linalg import splu

from .energy import j_functional, lyapunov
from .grid import Grid
from .model import ModelParams, g, h_prime, reaction, to_zw
from .stationary import homogeneous_roots, reconstruct_uv, StationaryState

__all__ = [
    "State",
    "StepperConfig",
    "Trajectory",
    "MonitorRow",
    "DissipationReport",
    "ImexStepper",
    "step",
    "run",
    "dissipation_check",
    "gradient_flow_step",
    "gradient_flow_run",
    "dt_budget",
    "initial_state",
    "perturb_mass_preserving",
]

SCHEMES = ("imex-euler", "imex-cn")

# tolerated undershoot for the positivity monitor
POSITIVITY_TOL = 1e-8


@dataclass
class State:
    t: float
    u: np.ndarray
    v: np.ndarray

    def copy(self) -> "State":
        return State(self.t, self.u.copy(), self.v.copy())


@dataclass
class StepperConfig:
    """Time-stepping plan plus the seeded initial-data perturbation."""

    dt: float
    t_end: float
    scheme: str = "imex-euler"
    output_every: int = 1
    seed: int = 0
    amplitude: float = 0.01

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.output_every < 1:
            raise ValueError("output_every must be a positive integer")


@dataclass
class MonitorRow:
    t: float
    mass: float
    min_u: float
    min_v: float
    lyap: float
    j_lambda: float
    grad_w_inf: float
    z_t_norm: float


@dataclass
class Trajectory:
    lam: float
    rows: list[MonitorRow] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    min_u_run: float = np.inf
    min_v_run: float = np.inf
    positivity_violated: bool = False
    stopped_early: bool = False

    @property
    def final(self) -> State:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def dt_budget(state: State, params: ModelParams) -> float:
    """Explicit-reaction stability budget, 0.5 / max(|f_u|, |f_v|).

    f_u = h'(z) and f_v = h'(z) + k over the current state range.
    """
    hp = h_prime(state.u + state.v, params)
    bound = max(np.max(np.abs(hp)), np.max(np.abs(hp + params.k)))
    return 0.5 / bound if bound > 0 else np.inf


class ImexStepper:
    """One factorized IMEX stepper for a fixed (grid, params, dt, scheme)."""

    def __init__(self, grid: Grid, params: ModelParams, config: StepperConfig):
        self.grid = grid
        self.params = params
        self.config = config
        lap = grid.laplacian_matrix.tocsc()
        eye = sp_identity(grid.n_total, format="csc")
        dt = config.dt
        p = params
        if config.scheme == "imex-euler":
            self._mat_u = (eye - dt * p.D * lap).tocsr()
            self._mat_v = (eye - (dt / p.tau) * lap).tocsr()
            self._explicit_u = None
            self._explicit_v = None
        else:  # imex-cn
            self._mat_u = (eye - 0.5 * dt * p.D * lap).tocsr()
            self._mat_v = (eye - 0.5 * (dt / p.tau) * lap).tocsr()
            self._explicit_u = (eye + 0.5 * dt * p.D * lap).tocsr()
            self._explicit_v = (eye + 0.5 * (dt / p.tau) * lap).tocsr()
        self._lu_u = splu(self._mat_u.tocsc())
        self._lu_v = splu(self._mat_v.tocsc())

    def _solve(self, lu, mat, rhs):
        # one pass of iterative refinement keeps the per-step mass defect at
        # machine level regardless of the implicit matrix conditioning
        x = lu.solve(rhs)
        x += lu.solve(rhs - mat @ x)
        return x

    def step(self, state: State) -> State:
        p = self.params
        dt = self.config.dt
        r = reaction(state.u, state.v, p)
        if self._explicit_u is None:
            rhs_u = state.u + dt * r
            rhs_v = state.v - (dt / p.tau) * r
        else:
            rhs_u = self._explicit_u @ state.u + dt * r
            rhs_v = self._explicit_v @ state.v - (dt / p.tau) * r
        u_new = self._solve(self._lu_u, self._mat_u, rhs_u)
        v_new = self._solve(self._lu_v, self._mat_v, rhs_v)
        # magnitude guard: catch runaway explicit steps before they overflow
        # the scalar monitors
        bound = 1e100
        if not (np.isfinite(u_new).all() and np.isfinite(v_new).all()) \
                or np.abs(u_new).max() > bound or np.abs(v_new).max() > bound:
            raise FloatingPointError(
                f"state diverged after step at t = {state.t:.6g} (dt = {dt:.3g})"
            )
        return State(state.t + dt, u_new, v_new)


def step(state: State, grid: Grid, params: ModelParams, config: StepperConfig) -> State:
    """Advance one step.  For long runs prefer `run`, which reuses the factorization."""
    return ImexStepper(grid, params, config).step(state)


def _monitor_row(state, grid, params, lam, prev):
    """prev is (z, t) of the previous record, or None for the first row."""
    z, w = to_zw(state.u, state.v, params)
    if prev is None:
        z_t = 0.0
    else:
        z_prev, t_prev = prev
        z_t = grid.norm(z - z_prev) / (state.t - t_prev)
    return MonitorRow(
        t=state.t,
        mass=grid.integral(state.u + params.tau * state.v),
        min_u=float(state.u.min()),
        min_v=float(state.v.min()),
        lyap=lyapunov(z, w, grid, params).total,
        j_lambda=j_functional(z, grid, params, lam).total,
        grad_w_inf=grid.grad_sup(w),
        z_t_norm=z_t,
    ), (z, state.t)


def run(initial: State, grid: Grid, params: ModelParams, config: StepperConfig,
        store_states: bool = True, stop_when=None, check_budget: bool = True) -> Trajectory:
    """Integrate to t_end, recording monitors every `output_every` steps.

    stop_when, if given, receives each recorded MonitorRow and may return
    True to end the run early (used for settling detection).  A NaN state
    aborts with FloatingPointError; positivity undershoot beyond the
    tolerance only raises a flag on the trajectory.
    """
    if config.t_end <= initial.t:
        raise ValueError("t_end must exceed the initial time")
    if check_budget:
        budget = dt_budget(initial, params)
        if config.dt > budget:
            warnings.warn(
                f"dt = {config.dt:.3g} exceeds the explicit-reaction budget {budget:.3g}",
                stacklevel=2,
            )
    stepper = ImexStepper(grid, params, config)
    p = params
    z0, w0 = to_zw(initial.u, initial.v, p)
    lam = grid.integral(p.xi * z0 + w0)
    traj = Trajectory(lam=lam)

    row, prev = _monitor_row(initial, grid, p, lam, None)
    traj.rows.append(row)
    if store_states:
        traj.states.append(initial.copy())
    traj.min_u_run = row.min_u
    traj.min_v_run = row.min_v

    n_steps = int(round((config.t_end - initial.t) / config.dt))
    state = initial
    for k in range(1, n_steps + 1):
        state = stepper.step(state)
        mu = state.u.min()
        mv = state.v.min()
        if mu < traj.min_u_run:
            traj.min_u_run = float(mu)
        if mv < traj.min_v_run:
            traj.min_v_run = float(mv)
        if k % config.output_every == 0 or k == n_steps:
            row, prev = _monitor_row(state, grid, p, lam, prev)
            traj.rows.append(row)
            if store_states:
                traj.states.append(state.copy())
            if stop_when is not None and stop_when(row):
                traj.stopped_early = True
                break
    traj.positivity_violated = (traj.min_u_run < -POSITIVITY_TOL
                                or traj.min_v_run < -POSITIVITY_TOL)
    return traj


@dataclass
class DissipationReport:
    """Discrete Lyapunov dissipation audit over consecutive stored states."""

    dt: float
    lhs: np.ndarray            # -(L_{n+1} - L_n) / dt
    rhs: np.ndarray            # xi ||z_t||^2 + ||w_t||^2 + alpha D ||Lap w||^2 + alpha k ||grad w||^2
    mismatch: np.ndarray       # relative gap per interval
    max_mismatch: float
    max_lyap_increase: float   # max over intervals of L_{n+1} - L_n
    max_abs_side: float


def dissipation_check(traj: Trajectory, grid: Grid, params: ModelParams) -> DissipationReport:
    """Compare -dL/dt against the dissipation functional, interval by interval.

    Time derivatives are difference quotients between stored states; the
    elliptic terms are evaluated at the newer state, so the mismatch is
    first order in the recording interval.
    """
    if len(traj.states) < 2:
        raise ValueError("need at least two stored states")
    p = params
    lhs = []
    rhs = []
    dls = []
    pairs = zip(traj.states[:-1], traj.states[1:])
    L_prev = None
    for a, b in pairs:
        za, wa = to_zw(a.u, a.v, p)
        zb, wb = to_zw(b.u, b.v, p)
        dt = b.t - a.t
        if L_prev is None:
            L_prev = lyapunov(za, wa, grid, p).total
        L_next = lyapunov(zb, wb, grid, p).total
        z_t = (zb - za) / dt
        w_t = (wb - wa) / dt
        lap_w = grid.laplacian(wb)
        diss = (p.xi * grid.inner(z_t, z_t)
                + grid.inner(w_t, w_t)
                + p.alpha * p.D * grid.inner(lap_w, lap_w)
                + p.alpha * p.k * grid.grad_norm_sq(wb))
        lhs.append(-(L_next - L_prev) / dt)
        rhs.append(diss)
        dls.append(L_next - L_prev)
        L_prev = L_next
    lhs = np.array(lhs)
    rhs = np.array(rhs)
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    mismatch = np.abs(lhs - rhs) / scale
    return DissipationReport(
        dt=float(traj.states[1].t - traj.states[0].t),
        lhs=lhs,
        rhs=rhs,
        mismatch=mismatch,
        max_mismatch=float(mismatch.max()),
        max_lyap_increase=float(np.max(dls)),
        max_abs_side=float(np.maximum(np.abs(lhs), np.abs(rhs)).max()),
    )


def gradient_flow_step(z: np.ndarray, grid: Grid, params: ModelParams, lam: float,
                       dt: float) -> np.ndarray:
    """One IMEX step of the scalar nonlocal flow z_t = -dJ_lambda(z).

    Explicitly, z_t = D Lap z + g(z) + (k/|Omega|)(lambda - xi int z) with
    implicit diffusion.  J_lambda is nonincreasing along steps within O(dt).
    """
    p = params
    z = grid.check(z)
    eye = sp_identity(grid.n_total, format="csc")
    lu = splu((eye - dt * p.D * grid.laplacian_matrix).tocsc())
    nl = (p.k / grid.volume) * (lam - p.xi * grid.integral(z))
    z_new = lu.solve(z + dt * (g(z, p) + nl))
    if not np.isfinite(z_new).all():
        raise FloatingPointError("non-finite profile in gradient flow step")
    return z_new


def gradient_flow_run(z0: np.ndarray, grid: Grid, params: ModelParams, lam: float,
                      dt: float, t_end: float, record_every: int = 1):
    """Relax the scalar flow; returns (final z, times, J values)."""
    p = params
    z = grid.check(z0).copy()
    eye = sp_identity(grid.n_total, format="csc")
    lu = splu((eye - dt * p.D * grid.laplacian_matrix).tocsc())
    n_steps = int(round(t_end / dt))
    times = [0.0]
    j_vals = [j_functional(z, grid, p, lam).total]
    for k in range(1, n_steps + 1):
        nl = (p.k / grid.volume) * (lam - p.xi * grid.integral(z))
        z = lu.solve(z + dt * (g(z, p) + nl))
        if not np.isfinite(z).all():
            raise FloatingPointError("non-finite profile in gradient flow run")
        if k % record_every == 0 or k == n_steps:
            times.append(k * dt)
            j_vals.append(j_functional(z, grid, p, lam).total)
    return z, np.array(times), np.array(j_vals)


def initial_state(grid: Grid, params: ModelParams, lam: float, amplitude: float = 0.01,
                  seed: int = 0) -> State:
    """Homogeneous equilibrium for mass lam plus seeded relative noise.

    The equilibrium is the homogeneous root of the stationary problem; u and
    v receive independent uniform perturbations of the given relative
    amplitude.  Raises if no root exists in the default bracket.
    """
    roots = homogeneous_roots(params, lam, volume=grid.volume)
    if not roots:
        raise ValueError(f"no homogeneous equilibrium found for lambda = {lam}")
    z_bar = roots[0]
    w_bar = (lam - params.xi * z_bar * grid.volume) / grid.volume
    holder = StationaryState(
        z_star=np.full(grid.n_total, z_bar), w_bar=w_bar, lam=lam,
        residual_norm=0.0, j_value=0.0, iterations=0, residual_history=[],
    )
    u_bar, v_bar = reconstruct_uv(holder, params)
    rng = np.random.default_rng(seed)
    u = u_bar * (1.0 + amplitude * rng.uniform(-1.0, 1.0, grid.n_total))
    v = v_bar * (1.0 + amplitude * rng.uniform(-1.0, 1.0, grid.n_total))
    return State(0.0, u, v)


def perturb_mass_preserving(state: State, grid: Grid, params: ModelParams,
                            amplitude: float, seed: int = 0) -> State:
    """Add seeded noise to (u, v) without changing the conserved mass.

    The noise on each component has zero weighted mean, so int(u + tau v)
    and hence lambda are preserved exactly.
    """
    rng = np.random.default_rng(seed)
    du = rng.uniform(-1.0, 1.0, grid.n_total)
    dv = rng.uniform(-1.0, 1.0, grid.n_total)
    du -= grid.mean(du)
    dv -= grid.mean(dv)
    return State(state.t, state.u + amplitude * du, state.v + amplitude * dv)
