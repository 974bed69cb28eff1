"""Spatial discretization with homogeneous Neumann boundary conditions.

Node-centered grid on an interval (or a tensor-product rectangle) that
includes the boundary nodes.  The Laplacian uses the standard second-order
stencil closed with reflected ghost nodes, and the quadrature weights are
trapezoidal.  This combination makes two identities hold to roundoff, and
much of the package relies on them:

  * conservation: sum_i w_i (Lap f)_i == 0 for every field f,
  * summation by parts: (-Lap f, g)_w == (grad f, grad g)_faces.

Eigenpairs of the discrete operator are available in closed form: sampled
cosines with eigenvalues (2/h^2)(1 - cos(pi (l-1) h / L)) per axis.  They
are exact eigenvectors of the assembled matrix, not continuum surrogates,
so spectral tests built on them are exact at finite resolution.

Fields are plain one-dimensional numpy arrays of length grid.n_total
(C-order flattening of the (nx, ny) array in 2D).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = ["Grid"]


def _lap1d(n: int, h: float) -> sp.csr_matrix:
    """Second-order Neumann Laplacian on n nodes with spacing h."""
    a = 1.0 / (h * h)
    main = np.full(n, -2.0 * a)
    off = np.full(n - 1, a)
    lap = sp.diags([off, main, off], offsets=[-1, 0, 1], format="lil")
    # reflected ghost nodes double the boundary off-diagonal
    lap[0, 1] = 2.0 * a
    lap[n - 1, n - 2] = 2.0 * a
    return lap.tocsr()


def _weights1d(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


class Grid:
    """Mesh, quadrature, Laplacian, and mode basis for one rectangular domain."""

    def __init__(self, n, lengths):
        n = tuple(int(v) for v in np.atleast_1d(n))
        lengths = tuple(float(v) for v in np.atleast_1d(lengths))
        if len(n) != len(lengths) or len(n) not in (1, 2):
            raise ValueError("n and lengths must both have 1 or 2 entries")
        if any(v < 8 for v in n):
            raise ValueError("need at least 8 nodes per axis")
        if any(v <= 0 for v in lengths):
            raise ValueError("domain lengths must be positive")
        self.dim = len(n)
        self.n = n
        self.lengths = lengths
        self.h = tuple(L / (m - 1) for L, m in zip(lengths, n))
        self.x = tuple(np.linspace(0.0, L, m) for L, m in zip(lengths, n))
        axis_w = [_weights1d(m, hh) for m, hh in zip(n, self.h)]
        axis_lap = [_lap1d(m, hh) for m, hh in zip(n, self.h)]
        if self.dim == 1:
            self.weights = axis_w[0]
            self.laplacian_matrix = axis_lap[0]
        else:
            self.weights = np.kron(axis_w[0], axis_w[1])
            eye = [sp.identity(m, format="csr") for m in n]
            self.laplacian_matrix = (sp.kron(axis_lap[0], eye[1], format="csr")
                                     + sp.kron(eye[0], axis_lap[1], format="csr"))
        self.n_total = int(np.prod(n))
        self.volume = float(np.prod(lengths))
        self._basis = None

    @classmethod
    def interval(cls, n: int, length: float = 1.0) -> "Grid":
        return cls((n,), (length,))

    @classmethod
    def rectangle(cls, n, lengths=(1.0, 1.0)) -> "Grid":
        return cls(n, lengths)

    # -- basic field operations -------------------------------------------

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n_total,):
            raise ValueError(f"field has shape {f.shape}, expected ({self.n_total},)")
        return f

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.laplacian_matrix @ self.check(f)

    def integral(self, f: np.ndarray) -> float:
        return float(self.weights @ self.check(f))

    def mean(self, f: np.ndarray) -> float:
        return self.integral(f) / self.volume

    def project_zero_mean(self, f: np.ndarray) -> np.ndarray:
        f = self.check(f)
        return f - self.mean(f)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        a = self.check(a)
        b = self.check(b)
        return float(self.weights @ (a * b))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(f, f), 0.0)))

    # -- gradient quantities ----------------------------------------------

    def grad_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Face-weighted inner product of gradients.

        Defined so that (-Lap a, b)_w == grad_inner(a, b) exactly.
        """
        a = self.check(a)
        b = self.check(b)
        if self.dim == 1:
            da = np.diff(a)
            db = np.diff(b)
            return float(np.sum(da * db) / self.h[0])
        nx, ny = self.n
        A = a.reshape(nx, ny)
        B = b.reshape(nx, ny)
        wx = _weights1d(nx, self.h[0])
        wy = _weights1d(ny, self.h[1])
        sx = np.sum((np.diff(A, axis=0) * np.diff(B, axis=0)) @ wy) / self.h[0]
        sy = np.sum(wx @ (np.diff(A, axis=1) * np.diff(B, axis=1))) / self.h[1]
        return float(sx + sy)

    def grad_norm_sq(self, f: np.ndarray) -> float:
        return self.grad_inner(f, f)

    def grad_sup(self, f: np.ndarray) -> float:
        """Max absolute one-sided difference quotient over all faces."""
        f = self.check(f)
        if self.dim == 1:
            return float(np.max(np.abs(np.diff(f))) / self.h[0])
        nx, ny = self.n
        F = f.reshape(nx, ny)
        gx = np.max(np.abs(np.diff(F, axis=0))) / self.h[0] if nx > 1 else 0.0
        gy = np.max(np.abs(np.diff(F, axis=1))) / self.h[1] if ny > 1 else 0.0
        return float(max(gx, gy))

    # -- discrete Neumann eigenpairs ---------------------------------------

    def _axis_eigenpairs(self, axis: int):
        m = self.n[axis]
        hh = self.h[axis]
        L = self.lengths[axis]
        ell = np.arange(m)
        etas = (2.0 / (hh * hh)) * (1.0 - np.cos(np.pi * ell * hh / L))
        vecs = np.cos(np.pi * np.outer(self.x[axis], ell) / L)
        return etas, vecs

    def eigenbasis(self):
        """All n_total eigenpairs of the discrete Neumann Laplacian.

        Returns (etas, E) with etas ascending and E carrying one eigenvector
        per column, orthonormal in the weighted inner product.  The first
        pair is (0, constant).  Cached on the grid.
        """
        if self._basis is not None:
            return self._basis
        if self.dim == 1:
            etas, vecs = self._axis_eigenpairs(0)
        else:
            ex, vx = self._axis_eigenpairs(0)
            ey, vy = self._axis_eigenpairs(1)
            etas = np.add.outer(ex, ey).ravel()
            vecs = np.empty((self.n_total, self.n_total))
            col = 0
            for i in range(self.n[0]):
                for j in range(self.n[1]):
                    vecs[:, col] = np.outer(vx[:, i], vy[:, j]).ravel()
                    col += 1
        order = np.argsort(etas, kind="stable")
        etas = etas[order]
        vecs = vecs[:, order]
        norms = np.sqrt(self.weights @ (vecs * vecs))
        vecs = vecs / norms
        # deterministic sign: largest-magnitude component positive
        idx = np.argmax(np.abs(vecs), axis=0)
        signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
        vecs = vecs * signs
        self._basis = (etas, vecs)
        return self._basis

    def neumann_eigenpairs(self, count: int):
        """First `count` eigenpairs, as a list of (eigenvalue, eigenvector)."""
        if count > self.n_total:
            raise ValueError(f"requested {count} eigenpairs but grid has {self.n_total} nodes")
        etas, vecs = self.eigenbasis()
        return [(float(etas[i]), vecs[:, i].copy()) for i in range(count)]

    @property
    def eta2(self) -> float:
        """Smallest positive eigenvalue of the discrete Neumann Laplacian."""
        etas, _ = self.eigenbasis()
        return float(etas[1])

    def __repr__(self):
        return f"Grid(n={self.n}, lengths={self.lengths})"
