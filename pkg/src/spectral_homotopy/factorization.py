"""Spectral factorization maps.

Connects positive definite spectra to their stable, minimum-phase (outer)
factors:

* ``right_outer_factor`` realizes W(z) = z C G(z), the outer factor of the
  density G* Lambda G induced by a stable factor parameter C;
* ``h_map`` computes that parameter from Lambda via the lag-weight Riccati
  equation, C = L^{-*} B* P with B*PB = L*L;
* ``h_inverse`` recovers Lambda as the range projection of C*C;
* ``left_outer_factor`` factors Z + Z* = W W* for a stable Z with positive
  real part, via the additive-form Riccati equation;
* ``scalar_outer_factor`` factors the scalar density c + s |sigma|^2, the
  building block of the prior homotopy.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from dataclasses import dataclass

from .errors import MembershipError
from .matrixeq import solve_dare_appendix, solve_dare_lambda, solve_dlyap
from .statespace import (FactorParameter, StateSpaceSystem, coerce_field,
                         constant_prior, prior_from_outer)

__all__ = [
    "OuterFactor",
    "right_outer_factor",
    "left_outer_factor_from_additive",
    "h_map",
    "h_inverse",
    "scalar_outer_factor",
    "homotopy_prior",
    "density_values",
]


@dataclass(frozen=True)
class OuterFactor:
    """A stable square factor with all its zeros inside the unit disk.

    kind "right" factors a density as W*W (the factor z C G of the induced
    density G* Lambda G); kind "left" factors an additive decomposition
    Z + Z* as W W*.
    """

    system: StateSpaceSystem
    kind: str

    def __post_init__(self):
        if self.kind not in ("right", "left"):
            raise ValueError(f"kind must be 'right' or 'left', got {self.kind!r}")
        if self.system.n_inputs != self.system.n_outputs:
            raise ValueError("outer factors are square")

    def eval(self, z):
        return self.system.eval(z)

    def eval_grid(self, z):
        return self.system.eval_grid(z)


def right_outer_factor(filterbank, C):
    """W(z) = z C G(z), realized as (A, B, CA, CB).

    W is square with invertible, lower-triangular W(inf) = CB and zero
    dynamics equal to the closed loop, hence outer whenever C lies in the
    stable factor set.
    """
    param = C if isinstance(C, FactorParameter) else FactorParameter(filterbank, C)
    A, B = filterbank.A, filterbank.B
    return OuterFactor(StateSpaceSystem(A, B, param.C @ A, param.CB), "right")


def _left_outer_system(Z, method="doubling"):
    """State-space outer W with W W* = Z + Z*, plus the Riccati record.

    W(z) = H (zI - F)^{-1} (G + F P H*) L^{-*} + L with L L* the innovation
    block R + H P H*; the zeros of W are the eigenvalues of the closed loop.
    """
    if Z.n_inputs != Z.n_outputs:
        raise ValueError("Z must be square")
    if not Z.is_stable():
        raise MembershipError(
            f"Z is not Schur stable: spectral radius {Z.spectral_radius():.15g}")
    sol = solve_dare_appendix(Z.A, Z.B, Z.C, Z.D, method=method)
    F, G, H = Z.A, Z.B, Z.C
    L = sol.L
    if Z.n_states:
        M = G + F @ sol.P @ H.conj().T
        Bw = solve_triangular(L.conj(), M.conj().T, lower=True).conj().T
    else:
        Bw = np.zeros((0, L.shape[0]), dtype=L.dtype)
    W = StateSpaceSystem(F, Bw, H, L)
    return W, sol


def left_outer_factor_from_additive(F, Gm, H, J, method="doubling",
                                    details=False):
    """Outer W with W W* = Z + Z* for Z(z) = H (zI - F)^{-1} Gm + J.

    Preconditions and failure modes are those of the additive-form Riccati
    solver (F Schur stable, Z + Z* > 0 on the circle, J + J* > 0).  Returns
    the OuterFactor, or ``(factor, sol)`` when ``details`` is set.
    """
    Z = StateSpaceSystem(F, Gm, H, J)
    W, sol = _left_outer_system(Z, method=method)
    factor = OuterFactor(W, "left")
    if details:
        return factor, sol
    return factor


def h_map(filterbank, Lam, method="doubling", grid_n=1024, details=False):
    """Stable factor parameter C with (z C G)(z C G)* = G* Lambda G.

    Solves the lag-weight Riccati equation for P, factors B*PB = L*L with L
    lower triangular and positive diagonal, and sets C = L^{-*} B* P.  The
    product CB is snapped to the computed L exactly (the correction is a
    least-squares touch-up of size comparable to roundoff), so membership of
    the result is checked with strict tolerances.

    Returns the FactorParameter, or ``(param, sol)`` when ``details`` is set.
    """
    sol = solve_dare_lambda(filterbank, Lam, method=method, grid_n=grid_n)
    B = filterbank.B
    P, L = sol.P, sol.L
    C = solve_triangular(L.conj().T, B.conj().T @ P, lower=False)
    # CB equals L^{-*} (B*PB) = L^{-*} L* L = L up to roundoff; replace the
    # residual mismatch through the pseudoinverse so the triangular structure
    # is exact.
    CB = C @ B
    pinvB = np.linalg.solve(B.conj().T @ B, B.conj().T)
    C = C + (L - CB) @ pinvB
    C = coerce_field(C, filterbank.field, what="factor parameter C")
    param = FactorParameter(filterbank, C)
    if details:
        return param, sol
    return param


def h_inverse(chart, C):
    """Lambda with G* Lambda G = (z C G)(z C G)*: the range projection of C*C.

    ``chart`` must expose ``project_range_gamma``;  ``C`` may be a raw matrix
    or a FactorParameter.
    """
    Cm = C.C if isinstance(C, FactorParameter) else np.atleast_2d(np.asarray(C))
    return chart.project_range_gamma(Cm.conj().T @ Cm)


def _gramian_additive_data(sigma):
    """(F, N, H, J) with sigma sigma* = Z + Z*, Z = H (zI-F)^{-1} N + J.

    Built from the controllability Gramian: with Pc - A Pc A* = B B*,
    N = A Pc C* + B D* and J = (C Pc C* + D D*) / 2.
    """
    A, B, C, D = sigma.A, sigma.B, sigma.C, sigma.D
    if sigma.n_states == 0:
        J = 0.5 * (D @ D.conj().T)
        return A, np.zeros((0, 1)), C, J
    Pc = solve_dlyap(A, B @ B.conj().T)
    N = A @ Pc @ C.conj().T + B @ D.conj().T
    J = 0.5 * (C @ Pc @ C.conj().T + D @ D.conj().T)
    return A, N, C, J


def scalar_outer_factor(c, s, sigma):
    """Outer factor of the scalar density c + s |sigma(e^{i theta})|^2.

    Parameters
    ----------
    c : float >= 0, constant offset
    s : float >= 0, scaling of the rational part (c + s > 0)
    sigma : StateSpaceSystem, scalar Schur-stable outer factor

    Returns
    -------
    StateSpaceSystem
        Outer W with |W|^2 = c + s |sigma|^2 on the unit circle.
    """
    c = float(c)
    s = float(s)
    if c < 0 or s < 0 or c + s <= 0:
        raise ValueError("need c >= 0, s >= 0 and c + s > 0")
    if sigma.n_inputs != 1 or sigma.n_outputs != 1:
        raise ValueError("sigma must be scalar")
    if s == 0.0:
        zero = np.zeros((0, 0))
        return StateSpaceSystem(zero, np.zeros((0, 1)), np.zeros((1, 0)),
                                np.array([[np.sqrt(c)]]))
    F, N, H, J = _gramian_additive_data(sigma)
    W, _ = _left_outer_system(StateSpaceSystem(F, s * N, H, s * J + 0.5 * c))
    return W


def homotopy_prior(prior, t):
    """The prior at homotopy parameter t: density (1 - t) + t psi.

    t = 0 returns the flat unit prior exactly; t = 1 returns ``prior``
    itself; intermediate values factor the blended density.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return constant_prior(1.0)
    if prior.is_constant:
        val = float(prior.psi_values(np.array([0.0]))[0])
        return constant_prior((1.0 - t) + t * val)
    if t == 1.0:
        return prior
    W = scalar_outer_factor(1.0 - t, t, prior.sigma)
    return prior_from_outer(W)


def density_values(filterbank, C, prior, theta):
    """The parametric spectral density on a grid of angles.

    Phi(theta) = psi(theta) * (W(e^{i theta})* W(e^{i theta}))^{-1} with
    W = z C G; returns shape (len(theta), m, m).
    """
    param = C if isinstance(C, FactorParameter) else FactorParameter(filterbank, C)
    theta = np.asarray(theta, dtype=float).ravel()
    W = right_outer_factor(filterbank, param).system
    Wv = W.eval_grid(np.exp(1j * theta))
    Mv = Wv.conj().transpose(0, 2, 1) @ Wv
    psi = prior.psi_values(theta)
    out = np.linalg.inv(Mv) * psi[:, None, None]
    return 0.5 * (out + out.conj().transpose(0, 2, 1))
