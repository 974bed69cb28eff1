"""Model constants, nonlinearities, and the (u, v) <-> (z, w) change of variables.

The model couples a slowly diffusing species u (diffusion coefficient D)
with a fast species v (time constant tau) through a saturating exchange
term.  Everything nonlinear lives in this module: the exchange rate h of
the summed variable z = u + v, the effective scalar reaction
g(z) = (1 - D) h(z) - k D z of the reduced problem, its antiderivative G,
and the invertible linear map to the variables (z, w) = (u + v, D u + v)
in which the system has a gradient structure.

All functions are pure and accept scalars or numpy arrays for the field
argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "derive_params",
    "h",
    "h_prime",
    "g",
    "g_prime",
    "G",
    "reaction",
    "to_zw",
    "from_zw",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical constants plus the derived coefficients of the (z, w) form.

    Attributes:
        D: diffusion coefficient of the slow species, positive and != 1.
        tau: time constant of the fast species, positive and != 1.
        alpha1: exchange rate, positive.
        alpha2: saturation strength, positive.
        k: reaction rate, equal to alpha1 by construction.
        xi: (1 - tau D) / (tau - 1), positive for admissible parameters.
        alpha: (1 - D) / (tau - 1), positive; always equals xi + D.
    """

    D: float
    tau: float
    alpha1: float
    alpha2: float
    k: float
    xi: float
    alpha: float


def derive_params(D: float, tau: float, alpha1: float, alpha2: float) -> ModelParams:
    """Validate the physical constants and derive (k, xi, alpha).

    The admissible region requires xi > 0 and alpha > 0, which is
    equivalent to either tau > 1 > tau*D or tau*D > 1 > tau.  Parameter
    sets outside that region, and the degenerate cases tau == 1 and
    D == 1, are rejected with a ValueError naming the failed constraint.
    """
    for name, value in (("D", D), ("tau", tau), ("alpha1", alpha1), ("alpha2", alpha2)):
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"{name} must be positive and finite, got {value!r}")
    if tau == 1.0:
        raise ValueError("tau == 1 makes the change of variables degenerate")
    if D == 1.0:
        raise ValueError("D == 1 forces alpha == 0, violating alpha > 0")
    xi = (1.0 - tau * D) / (tau - 1.0)
    alpha = (1.0 - D) / (tau - 1.0)
    if xi <= 0.0:
        raise ValueError(
            f"xi = (1 - tau*D)/(tau - 1) = {xi:.6g} must be positive "
            "(need tau > 1 > tau*D or tau*D > 1 > tau)"
        )
    if alpha <= 0.0:
        raise ValueError(
            f"alpha = (1 - D)/(tau - 1) = {alpha:.6g} must be positive "
            "(need tau > 1 > tau*D or tau*D > 1 > tau)"
        )
    return ModelParams(D=float(D), tau=float(tau), alpha1=float(alpha1),
                       alpha2=float(alpha2), k=float(alpha1), xi=xi, alpha=alpha)


def h(z, params: ModelParams):
    """Saturating exchange term, -alpha1 * z / (alpha2 * z + 1)**2."""
    z = np.asarray(z, dtype=float)
    den = params.alpha2 * z + 1.0
    out = -params.alpha1 * z / (den * den)
    return out if out.ndim else float(out)


def h_prime(z, params: ModelParams):
    """Exact derivative of h: -alpha1 * (1 - alpha2*z) / (alpha2*z + 1)**3."""
    z = np.asarray(z, dtype=float)
    den = params.alpha2 * z + 1.0
    out = -params.alpha1 * (1.0 - params.alpha2 * z) / (den * den * den)
    return out if out.ndim else float(out)


def g(z, params: ModelParams):
    """Effective scalar reaction of the reduced variable, (1-D) h(z) - k D z."""
    z = np.asarray(z, dtype=float)
    out = (1.0 - params.D) * h(z, params) - params.k * params.D * z
    return out if np.ndim(out) else float(out)


def g_prime(z, params: ModelParams):
    """Exact derivative of g."""
    z = np.asarray(z, dtype=float)
    out = (1.0 - params.D) * h_prime(z, params) - params.k * params.D
    return out if np.ndim(out) else float(out)


def G(z, params: ModelParams):
    """Antiderivative of g with G(0) = 0, in closed form.

    Integrating h gives
        int_0^z h = -(alpha1/alpha2**2) * [log(alpha2 z + 1)
                                           + 1/(alpha2 z + 1) - 1],
    so G(z) = (1-D) * int_0^z h - k D z**2 / 2.  The closed form is
    cross-checked against adaptive quadrature of g in the test suite.
    """
    z = np.asarray(z, dtype=float)
    a2 = params.alpha2
    den = a2 * z + 1.0
    int_h = -(params.alpha1 / (a2 * a2)) * (np.log1p(a2 * z) + 1.0 / den - 1.0)
    out = (1.0 - params.D) * int_h - 0.5 * params.k * params.D * z * z
    return out if out.ndim else float(out)


def reaction(u, v, params: ModelParams):
    """Reaction term of the (u, v) system, f(u, v) = h(u + v) + k v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = h(u + v, params) + params.k * v
    return out if np.ndim(out) else float(out)


def to_zw(u, v, params: ModelParams):
    """Map (u, v) to (z, w) = (u + v, D u + v), pointwise."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u + v, params.D * u + v


def from_zw(z, w, params: ModelParams):
    """Invert to_zw: u = (w - z)/(D - 1), v = (D z - w)/(D - 1).

    Requires D != 1 (guaranteed for params built by derive_params).
    """
    if params.D == 1.0:
        raise ValueError("change of variables is singular for D == 1")
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    d = params.D - 1.0
    return (w - z) / d, (params.D * z - w) / d
