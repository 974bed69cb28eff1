"""Solvers for the nonlocal stationary problem and its equal-timescale limit.

The stationary profiles z(x) satisfy

    -D Lap z = g(z) + (k/|Omega|) (lambda - xi int z),  Neumann,

which is the Euler-Lagrange equation of j_functional.  This module finds
homogeneous roots by bracketing, nonhomogeneous solutions by damped Newton
with the rank-one nonlocal term folded into the dense Jacobian, and
reconstructs the physical pair (u, v) from a converged profile.  The
tau -> 1 limit problem, -D Lap z = g(z) - <g(z)> with prescribed int z,
is solved by an augmented Newton iteration whose extra unknown is the
multiplier mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .energy import j_functional
from .grid import Grid
from .model import G, ModelParams, g, g_prime

__all__ = [
    "StationaryState",
    "TauOneState",
    "SolverError",
    "stationary_residual",
    "homogeneous_roots",
    "newton_solve",
    "reconstruct_uv",
    "cosine_seed",
    "limit_tau1_solve",
]


class SolverError(RuntimeError):
    """Raised when an iteration fails to converge or hits a singular system."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


@dataclass
class StationaryState:
    """A converged solution of the nonlocal stationary problem."""

    z_star: np.ndarray
    w_bar: float
    lam: float
    residual_norm: float
    j_value: float
    iterations: int
    residual_history: list[float]
    morse_index: int | None = None


def stationary_residual(z: np.ndarray, grid: Grid, params: ModelParams, lam: float) -> np.ndarray:
    """F(z) = D Lap z + g(z) + (k/|Omega|)(lambda - xi int z)."""
    p = params
    z = grid.check(z)
    return p.D * grid.laplacian(z) + g(z, p) + (p.k / grid.volume) * (lam - p.xi * grid.integral(z))


def homogeneous_roots(params: ModelParams, lam: float, volume: float = 1.0,
                      z_max: float | None = None, n_scan: int = 2048,
                      tol: float = 1e-14) -> list[float]:
    """All constant solutions in [0, z_max], by sign scan plus bracketing.

    Returns an empty list when no sign change is found in the bracket.
    Each root is refined to machine precision with brentq.
    """
    p = params
    if z_max is None:
        z_max = 10.0 * max(1.0, lam / volume)

    def phi(zz):
        return g(zz, p) + p.k * (lam / volume - p.xi * zz)

    zs = np.linspace(0.0, z_max, n_scan)
    vals = phi(zs)
    roots: list[float] = []
    for i in range(n_scan - 1):
        a, b = zs[i], zs[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(float(brentq(phi, a, b, xtol=tol, rtol=4.0 * np.finfo(float).eps)))
    if vals[-1] == 0.0:
        roots.append(float(zs[-1]))
    # collapse near-duplicates from roots landing on scan nodes
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-10 * max(1.0, abs(r)):
            out.append(r)
    return out


def _jacobian(z, grid, params, lam):
    p = params
    J = p.D * grid.laplacian_matrix.toarray()
    J[np.diag_indices_from(J)] += g_prime(z, p)
    J -= (p.k * p.xi / grid.volume) * np.outer(np.ones(grid.n_total), grid.weights)
    return J


def newton_solve(z_init: np.ndarray, grid: Grid, params: ModelParams, lam: float,
                 tol: float = 1e-10, max_iter: int = 50, damped: bool = True) -> StationaryState:
    """Newton iteration on the nonlocal stationary problem.

    Convergence is declared when the weighted L2 norm of the residual drops
    below tol.  With damped=True a halving line search on the residual norm
    guards against bad initial guesses; damped=False takes full steps and
    exhibits textbook quadratic convergence near a root.
    """
    p = params
    z = grid.check(z_init).copy()
    history: list[float] = []
    res = stationary_residual(z, grid, p, lam)
    rnorm = grid.norm(res)
    history.append(rnorm)
    for it in range(1, max_iter + 1):
        if rnorm < tol:
            w_bar = (lam - p.xi * grid.integral(z)) / grid.volume
            return StationaryState(
                z_star=z, w_bar=w_bar, lam=lam, residual_norm=rnorm,
                j_value=j_functional(z, grid, p, lam).total,
                iterations=it - 1, residual_history=history,
            )
        J = _jacobian(z, grid, p, lam)
        try:
            delta = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            smin = float(np.linalg.svd(J, compute_uv=False)[-1])
            raise SolverError(
                f"singular Jacobian at iteration {it} (smallest singular value {smin:.3e})",
                residuals=history,
            ) from exc
        step = 1.0
        if damped:
            while step > 2.0**-30:
                trial = z + step * delta
                tnorm = grid.norm(stationary_residual(trial, grid, p, lam))
                if tnorm < (1.0 - 0.5 * step) * rnorm or tnorm < tol:
                    break
                step *= 0.5
            else:
                raise SolverError(
                    f"line search stalled at iteration {it} (residual {rnorm:.3e})",
                    residuals=history,
                )
        z = z + step * delta
        res = stationary_residual(z, grid, p, lam)
        rnorm = grid.norm(res)
        if not np.isfinite(rnorm):
            raise SolverError(f"residual diverged at iteration {it}", residuals=history)
        history.append(rnorm)
    if rnorm < tol:
        w_bar = (lam - p.xi * grid.integral(z)) / grid.volume
        return StationaryState(
            z_star=z, w_bar=w_bar, lam=lam, residual_norm=rnorm,
            j_value=j_functional(z, grid, p, lam).total,
            iterations=max_iter, residual_history=history,
        )
    raise SolverError(
        f"no convergence in {max_iter} iterations (residual {rnorm:.3e})",
        residuals=history,
    )


def reconstruct_uv(state: StationaryState, params: ModelParams):
    """Recover (u, v) from a stationary (z, w_bar) pair.

    u = (w_bar - z)/(D - 1) and v = (D z - w_bar)/(D - 1), so that
    u + v == z and D u + v == w_bar hold identically.
    """
    p = params
    if p.D == 1.0:
        raise ValueError("reconstruction is singular for D == 1")
    d = p.D - 1.0
    u = (state.w_bar - state.z_star) / d
    v = (p.D * state.z_star - state.w_bar) / d
    return u, v


def cosine_seed(grid: Grid, base: float, amplitude: float, mode: int = 1) -> np.ndarray:
    """Constant profile plus one cosine mode, the standard nonhomogeneous guess."""
    if grid.dim != 1:
        raise ValueError("cosine_seed is a 1D helper")
    return base + amplitude * np.cos(mode * np.pi * grid.x[0] / grid.lengths[0])


@dataclass
class TauOneState:
    """Solution of the equal-timescale (tau -> 1) limit problem."""

    z_star: np.ndarray
    mu: float
    lambda_hat: float
    residual_norm: float
    j_hat: float
    iterations: int


def limit_tau1_solve(z_init: np.ndarray, grid: Grid, params: ModelParams, lambda_hat: float,
                     tol: float = 1e-12, max_iter: int = 50, damped: bool = True) -> TauOneState:
    """Solve -D Lap z = g(z) + mu subject to int z = lambda_hat.

    The multiplier mu is an extra Newton unknown; solvability forces
    mu = -<g(z)> at convergence.  The initial guess is projected onto the
    mass constraint before iterating.  Only D and the reaction constants
    of `params` enter; tau, xi, alpha play no role in the limit problem.
    """
    p = params
    n = grid.n_total
    z = grid.check(z_init).copy()
    z += (lambda_hat - grid.integral(z)) / grid.volume
    mu = -grid.integral(g(z, p)) / grid.volume

    def residual(zz, m):
        r = np.empty(n + 1)
        r[:n] = p.D * grid.laplacian(zz) + g(zz, p) + m
        r[n] = grid.integral(zz) - lambda_hat
        return r

    def norm(r):
        return float(np.sqrt(grid.weights @ r[:n] ** 2 + r[n] ** 2))

    res = residual(z, mu)
    rnorm = norm(res)
    history = [rnorm]
    for it in range(1, max_iter + 1):
        if rnorm < tol:
            j_hat = 0.5 * p.D * grid.grad_norm_sq(z) - grid.integral(G(z, p))
            return TauOneState(z_star=z, mu=mu, lambda_hat=lambda_hat,
                               residual_norm=rnorm, j_hat=j_hat, iterations=it - 1)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = p.D * grid.laplacian_matrix.toarray()
        J[:n, :n][np.diag_indices(n)] += g_prime(z, p)
        J[:n, n] = 1.0
        J[n, :n] = grid.weights
        try:
            delta = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            smin = float(np.linalg.svd(J, compute_uv=False)[-1])
            raise SolverError(
                f"singular augmented Jacobian (smallest singular value {smin:.3e})",
                residuals=history,
            ) from exc
        step = 1.0
        if damped:
            while step > 2.0**-30:
                tz = z + step * delta[:n]
                tm = mu + step * delta[n]
                if norm(residual(tz, tm)) < (1.0 - 0.5 * step) * rnorm or norm(residual(tz, tm)) < tol:
                    break
                step *= 0.5
            else:
                raise SolverError(
                    f"line search stalled at iteration {it} (residual {rnorm:.3e})",
                    residuals=history,
                )
        z = z + step * delta[:n]
        mu = mu + step * delta[n]
        res = residual(z, mu)
        rnorm = norm(res)
        if not np.isfinite(rnorm):
            raise SolverError(f"residual diverged at iteration {it}", residuals=history)
        history.append(rnorm)
    if rnorm < tol:
        j_hat = 0.5 * p.D * grid.grad_norm_sq(z) - grid.integral(G(z, p))
        return TauOneState(z_star=z, mu=mu, lambda_hat=lambda_hat,
                           residual_norm=rnorm, j_hat=j_hat, iterations=max_iter)
    raise SolverError(
        f"no convergence in {max_iter} iterations (residual {rnorm:.3e})",
        residuals=history,
    )
