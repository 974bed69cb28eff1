"""Linearized operators, their spectra, and the weighted eigenvalue machinery.

Around a stationary profile z* two linearizations matter.  The scalar
variational Hessian

    L phi = -(D Lap phi + g'(z*) phi - (k xi / |Omega|) int phi)

is self-adjoint in the weighted inner product and its negative eigenvalue
count is the Morse index of the energy landscape.  The time linearization
is the pencil A = M^{-1} A1 acting on pairs (Z, W) with the conserved-mass
constraint int(W + xi Z) = 0; its eigenvalues with negative real part
count the unstable directions of the flow.  When xi eta2 > k the two
counts coincide, and eigenvalues of A with real part below alpha k/(2 xi)
are real.  The bridge is a family of weighted self-adjoint problems
L phi = mu M(s) phi whose curves mu_j(s) recover the negative spectrum of
A through the fixed-point relation mu_j(-sigma/alpha) = sigma.

All matrices are dense; the grids here are desk-scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grid import Grid
from .model import ModelParams, g_prime

__all__ = [
    "LinearizedPencil",
    "SpectrumReport",
    "MuCurveTable",
    "FixedPointResult",
    "build_L",
    "weighted_eigh",
    "hessian_eigs",
    "build_A",
    "spectral_comparison_report",
    "weighted_norm_matrix",
    "mu_curve",
    "negative_eigs_by_fixed_point",
]


def build_L(z_star: np.ndarray, grid: Grid, params: ModelParams) -> np.ndarray:
    """Assemble the variational Hessian as a dense operator matrix.

    The rank-one nonlocal term (k xi / |Omega|) * ones x weights makes the
    matrix nonsymmetric entrywise but exactly symmetric in the weighted
    inner product.
    """
    p = params
    z_star = grid.check(z_star)
    L = -p.D * grid.laplacian_matrix.toarray()
    L[np.diag_indices_from(L)] -= g_prime(z_star, p)
    L += (p.k * p.xi / grid.volume) * np.outer(np.ones(grid.n_total), grid.weights)
    return L


def weighted_eigh(A: np.ndarray, grid: Grid):
    """Eigendecomposition of a weighted-self-adjoint operator matrix.

    Symmetrizes sqrt(W) A sqrt(W)^{-1} and solves the standard symmetric
    problem, so all eigenvalues are real by construction.  Returns
    (values ascending, vectors) with columns orthonormal in the weighted
    inner product.
    """
    sqw = np.sqrt(grid.weights)
    S = (sqw[:, None] * A) / sqw[None, :]
    S = 0.5 * (S + S.T)
    vals, Y = scipy.linalg.eigh(S)
    vecs = Y / sqw[:, None]
    return vals, vecs


def hessian_eigs(z_star: np.ndarray, grid: Grid, params: ModelParams):
    """Eigenvalues and weighted-orthonormal eigenvectors of the Hessian."""
    return weighted_eigh(build_L(z_star, grid, params), grid)


@dataclass
class LinearizedPencil:
    """The pair (M, A1), the assembled A = M^{-1} A1, and its restriction."""

    A1: np.ndarray
    M: np.ndarray
    A_full: np.ndarray
    A_restricted: np.ndarray
    basis: np.ndarray          # orthonormal basis of the constrained subspace
    constraint: np.ndarray     # row vector c with c @ x == int(xi Z + W)
    cond_M: float


def build_A(z_star: np.ndarray, grid: Grid, params: ModelParams,
            w_bar: float | None = None) -> LinearizedPencil:
    """Assemble the time linearization around (z*, w_bar).

    A1 has blocks [[-D Lap - g'(z*), -k I], [0, -alpha Lap]] and M is the
    constant block matrix [[(1 + D xi/alpha) I, -(xi/alpha) I], [xi I, I]].
    M is inverted in closed block form (its block determinant is
    1 + xi (D + xi)/alpha = tau alpha).  The restriction uses an
    orthonormal basis of the hyperplane int(W + xi Z) = 0, which is
    invariant because the weighted column sums of the Laplacian vanish;
    the full-space spectrum carries exactly one extra zero eigenvalue
    along the conserved-mass direction.  w_bar is recorded context only;
    the linearization coefficients depend on z* alone.
    """
    p = params
    z_star = grid.check(z_star)
    n = grid.n_total
    lap = grid.laplacian_matrix.toarray()
    gp = g_prime(z_star, p)

    A1 = np.zeros((2 * n, 2 * n))
    A1[:n, :n] = -p.D * lap
    A1[:n, :n][np.diag_indices(n)] -= gp
    A1[:n, n:] = -p.k * np.eye(n)
    A1[n:, n:] = -p.alpha * lap

    r = p.xi / p.alpha
    m11 = 1.0 + p.D * r
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = m11 * np.eye(n)
    M[:n, n:] = -r * np.eye(n)
    M[n:, :n] = p.xi * np.eye(n)
    M[n:, n:] = np.eye(n)
    det = m11 + p.xi * r  # equals tau * alpha
    cond_M = float(np.linalg.cond(np.array([[m11, -r], [p.xi, 1.0]])))

    # closed-form block inverse applied to A1
    A_full = np.zeros((2 * n, 2 * n))
    A_full[:n, :n] = A1[:n, :n] / det
    A_full[:n, n:] = (A1[:n, n:] + r * A1[n:, n:]) / det
    A_full[n:, :n] = (-p.xi * A1[:n, :n]) / det
    A_full[n:, n:] = (-p.xi * A1[:n, n:] + m11 * A1[n:, n:]) / det

    c = np.concatenate([p.xi * grid.weights, grid.weights])
    basis = scipy.linalg.null_space(c[None, :])
    A_restricted = basis.T @ A_full @ basis
    return LinearizedPencil(A1=A1, M=M, A_full=A_full, A_restricted=A_restricted,
                            basis=basis, constraint=c, cond_M=cond_M)


@dataclass
class SpectrumReport:
    """Spectra of the two linearizations plus the comparison bookkeeping."""

    eigs_L: np.ndarray
    eigs_A: np.ndarray                 # restricted pencil, complex
    eigs_A_full: np.ndarray
    morse_L: int
    morse_A: int
    zero_L: int
    zero_A: int
    realness_violations: list[complex]
    hypothesis: bool                   # xi * eta2_h > k
    eta2: float
    real_threshold: float              # alpha k / (2 xi)
    real_threshold_strict: float       # k / (2 xi), reported but not asserted
    zero_tol: float
    ambiguous_L: list[float] = field(default_factory=list)
    ambiguous_A: list[complex] = field(default_factory=list)
    eigvec_cond: float = np.nan
    cond_M: float = np.nan
    mu_samples: "MuCurveTable | None" = None

    @property
    def counts_match(self) -> bool:
        return self.morse_A == self.morse_L and self.zero_A == self.zero_L


def _classify(values, zero_tol):
    """Split eigenvalues into (negative, zero, ambiguous) by magnitude bands."""
    re = np.real(values)
    mag = np.abs(values)
    negative = int(np.sum((re < 0) & (mag > zero_tol)))
    zero = int(np.sum(mag <= zero_tol))
    ambiguous = [complex(v) for v in np.asarray(values)[(mag > 0.5 * zero_tol) & (mag < 2.0 * zero_tol)]]
    return negative, zero, ambiguous


def spectral_comparison_report(z_star: np.ndarray, grid: Grid, params: ModelParams,
                               tol: float = 1e-8,
                               w_bar: float | None = None) -> SpectrumReport:
    """Diagonalize both linearizations and compare their stability counts.

    Checks realness of every restricted eigenvalue with real part below
    alpha k / (2 xi).  The zero-classification threshold is
    1e-8 * ||Hessian||; eigenvalues within a factor of two of it are
    flagged ambiguous rather than force-classified.  When xi eta2 <= k
    the count comparison is recorded as not applicable via
    `hypothesis == False`.
    """
    p = params
    eigs_L, _ = hessian_eigs(z_star, grid, params)
    pencil = build_A(z_star, grid, params, w_bar=w_bar)
    eigs_A = np.linalg.eigvals(pencil.A_restricted)
    eigs_A_full = np.linalg.eigvals(pencil.A_full)
    _, vecs = np.linalg.eig(pencil.A_restricted)
    eigvec_cond = float(np.linalg.cond(vecs))

    zero_tol = 1e-8 * float(np.max(np.abs(eigs_L)))
    morse_L, zero_L, amb_L = _classify(eigs_L, zero_tol)
    morse_A, zero_A, amb_A = _classify(eigs_A, zero_tol)

    threshold = p.alpha * p.k / (2.0 * p.xi)
    violations = [complex(s) for s in eigs_A
                  if s.real < threshold and abs(s.imag) > tol]
    return SpectrumReport(
        eigs_L=eigs_L,
        eigs_A=np.sort_complex(eigs_A),
        eigs_A_full=np.sort_complex(eigs_A_full),
        morse_L=morse_L,
        morse_A=morse_A,
        zero_L=zero_L,
        zero_A=zero_A,
        realness_violations=violations,
        hypothesis=bool(p.xi * grid.eta2 > p.k),
        eta2=grid.eta2,
        real_threshold=threshold,
        real_threshold_strict=p.k / (2.0 * p.xi),
        zero_tol=zero_tol,
        ambiguous_L=[v.real for v in amb_L],
        ambiguous_A=amb_A,
        eigvec_cond=eigvec_cond,
        cond_M=pencil.cond_M,
    )


def weighted_norm_matrix(s: float, grid: Grid, params: ModelParams) -> np.ndarray:
    """The weight operator M(s), assembled spectrally from the mode basis.

    Acts as (1 + xi (D + xi)/alpha) on constants and as
    (1 + D xi/alpha) + (xi/alpha)(k + s xi)/(eta_l + s) on the mode with
    discrete eigenvalue eta_l.  Requires s > -eta2 so the shifted
    resolvent exists on the zero-mean subspace; positive definite for
    s >= -k/xi whenever xi eta2 > k.
    """
    p = params
    etas, E = grid.eigenbasis()
    if s <= -etas[1]:
        raise ValueError(f"s = {s} is not admissible (need s > {-etas[1]:.6g})")
    coeff = np.empty(grid.n_total)
    coeff[0] = 1.0 + p.xi * (p.D + p.xi) / p.alpha
    coeff[1:] = (1.0 + p.D * p.xi / p.alpha) \
        + (p.xi / p.alpha) * (p.k + s * p.xi) / (etas[1:] + s)
    # E diag(coeff) E^T W, using weighted orthonormality of the columns
    return (E * coeff) @ (E.T * grid.weights[None, :])


def _weighted_forms(z_star, grid, params):
    """Symmetric quadratic forms (W L, and W itself) used by the mu solves."""
    WL = grid.weights[:, None] * build_L(z_star, grid, params)
    WL = 0.5 * (WL + WL.T)
    return WL


def _wm_matrix(s, grid, params):
    WM = grid.weights[:, None] * weighted_norm_matrix(s, grid, params)
    return 0.5 * (WM + WM.T)


@dataclass
class MuCurveTable:
    """Sampled generalized eigenvalue curves mu_j(s)."""

    s: np.ndarray
    mu: np.ndarray                # shape (len(s), j_max), ascending in j
    rayleigh_max_err: float


def mu_curve(z_star: np.ndarray, grid: Grid, params: ModelParams,
             s_grid, j_max: int) -> MuCurveTable:
    """Sample the first j_max curves of L phi = mu M(s) phi over s_grid.

    Every returned eigenpair is cross-checked against its Rayleigh
    quotient; the maximum discrepancy over the table is reported.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if j_max > grid.n_total:
        raise ValueError("j_max exceeds the number of grid modes")
    p = params
    WL = _weighted_forms(z_star, grid, params)
    gp = g_prime(grid.check(z_star), p)
    mu = np.empty((len(s_grid), j_max))
    ray_err = 0.0
    for i, s in enumerate(s_grid):
        WM = _wm_matrix(s, grid, params)
        try:
            vals, vecs = scipy.linalg.eigh(WL, WM, subset_by_index=[0, j_max - 1])
        except scipy.linalg.LinAlgError as exc:
            raise ValueError(f"M(s) is not positive definite at s = {s}") from exc
        mu[i] = vals
        for j in range(j_max):
            phi = vecs[:, j]
            num = (p.D * grid.grad_norm_sq(phi)
                   - grid.integral(gp * phi * phi)
                   + p.k * p.xi * grid.volume * grid.mean(phi) ** 2)
            den = float(phi @ WM @ phi)
            ray_err = max(ray_err, abs(num / den - vals[j]))
    return MuCurveTable(s=s_grid, mu=mu, rayleigh_max_err=float(ray_err))


@dataclass
class FixedPointResult:
    """Negative pencil eigenvalues recovered from the mu curves."""

    sigmas: list[float]       # sigma_j = -alpha * s_j, ascending
    s_roots: list[float]
    morse_L: int


def negative_eigs_by_fixed_point(z_star: np.ndarray, grid: Grid, params: ModelParams,
                                 xtol: float = 1e-13) -> FixedPointResult:
    """Solve mu_j(s)/s = -alpha for each negative Hessian curve.

    Requires xi eta2 > k.  For each j up to the Morse index of the Hessian
    the equation has a unique root s_j > 0 because mu_j(s)/s increases
    strictly from -inf to 0; the pencil eigenvalue is sigma_j = -alpha s_j.
    """
    from scipy.optimize import brentq

    p = params
    if not p.xi * grid.eta2 > p.k:
        raise ValueError("fixed-point characterization needs xi * eta2 > k")
    eigs_L, _ = hessian_eigs(z_star, grid, params)
    zero_tol = 1e-8 * float(np.max(np.abs(eigs_L)))
    m = int(np.sum(eigs_L < -zero_tol))
    WL = _weighted_forms(z_star, grid, params)

    def mu_j(s, j):
        WM = _wm_matrix(s, grid, params)
        vals = scipy.linalg.eigh(WL, WM, subset_by_index=[j, j], eigvals_only=True)
        return float(vals[0])

    sigmas = []
    roots = []
    for j in range(m):
        f = lambda s: mu_j(s, j) + p.alpha * s
        lo = 1e-8
        if f(lo) >= 0.0:
            raise SolverBracketError(j, lo, f(lo))
        hi = 1.0
        for _ in range(60):
            if f(hi) > 0.0:
                break
            hi *= 2.0
        else:
            raise SolverBracketError(j, hi, f(hi))
        s_root = brentq(f, lo, hi, xtol=xtol, rtol=4.0 * np.finfo(float).eps)
        roots.append(float(s_root))
        sigmas.append(float(-p.alpha * s_root))
    order = np.argsort(sigmas)
    return FixedPointResult(
        sigmas=[sigmas[i] for i in order],
        s_roots=[roots[i] for i in order],
        morse_L=m,
    )


class SolverBracketError(RuntimeError):
    """Bisection bracket failure, with the offending curve sample attached."""

    def __init__(self, j, s, value):
        super().__init__(
            f"no sign change for curve {j + 1}: mu(s) + alpha*s = {value:.6g} at s = {s:.6g}"
        )
        self.curve = j
        self.s = s
        self.value = value
