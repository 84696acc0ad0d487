"""Moment maps, their derivatives, and coordinate charts.

The estimation problem matches state covariances: the moment of a density
Phi is integral(G Phi G*) dtheta / 2 pi.  Two parametrizations appear,

    f(psi, Lambda) = integral( G psi (G* Lambda G)^{-1} G* ),
    g(psi, C)      = integral( G psi (G* C* C G)^{-1} G* ),

together with their directional derivatives.  Both share one quadrature
kernel K = G M^{-1} G*: the derivative of either map in a direction D acting
inside M is -integral(psi K D K).

Values of f and g live in the range of the covariance operator
Gamma: X = integral(G Phi G*) satisfies X - A X A* = B H + H* B* for some H,
and directions C of the factor set live in the ambient slice
c = {V : V B lower triangular with real diagonal}.  Both spaces have the
same real dimension M; CoordinateChart carries orthonormal bases of the two
(inner product Re trace(X Y*)) and converts between matrices and R^M.

g also evaluates without quadrature: G (z C G)^{-1} is realized by the
closed loop, so g(psi, C) is a controllability Gramian of a cascade, and the
derivative g'(psi, C; V) follows from one spectral factorization.  The
quadrature and Gramian routes are implemented independently and various
tests hold them against each other.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import (EvaluationError, FactorizationError, MembershipError,
                     SolverError)
from .matrixeq import solve_dlyap
from .statespace import (FactorParameter, StateSpaceSystem, cascade,
                         circle_grid, coerce_field, factor_inner_realization,
                         grid_size_from_spacing, series_product)
from .factorization import _left_outer_system

__all__ = [
    "CoordinateChart",
    "JacobianSolveInfo",
    "make_chart",
    "build_range_gamma_basis",
    "build_factor_basis",
    "trace_inner",
    "moment_f_quadrature",
    "moment_g_quadrature",
    "moment_g_statespace",
    "apply_f2_quadrature",
    "apply_g2_quadrature",
    "apply_g2_statespace",
    "apply_g1_direction",
    "assemble_jacobian_matrix",
    "jacobian_condition_number",
    "solve_jacobian_system",
    "THREADS_ENV",
]

THREADS_ENV = "SPECTRAL_HOMOTOPY_THREADS"
DEFAULT_GRID_N = 4096
BASIS_DROP_TOL = 1e-9
GRAM_COND_LIMIT = 1e14
VERIFY_TOL = 1e-8
REFINE_ROUNDS = 30
# accumulated roundoff of a long Riemann sum; looser than the strict
# evaluation-route hygiene bound on purpose
QUAD_FIELD_TOL = 1e-9


def trace_inner(X, Y):
    """Real inner product Re trace(X Y*); both spaces here are real-linear."""
    return float(np.real(np.sum(np.asarray(X) * np.conj(Y))))


def _hermitize(X):
    return 0.5 * (X + X.conj().T)


def _worker_count():
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _ordered_map(fn, items):
    workers = _worker_count()
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _as_param(filterbank, C):
    return C if isinstance(C, FactorParameter) else FactorParameter(filterbank, C)


def _psi_on(prior, theta):
    if prior is None:
        return np.ones(theta.size)
    return prior.psi_values(theta)


def _sigma_system(prior):
    if prior is None:
        zero = np.zeros((0, 0))
        return StateSpaceSystem(zero, np.zeros((0, 1)), np.zeros((1, 0)),
                                np.array([[1.0]]))
    return prior.sigma


# ---------------------------------------------------------------------------
# quadrature kernel


def _resolve_grid(grid_n, dtheta):
    if grid_n is not None:
        return int(grid_n)
    if dtheta is not None:
        return grid_size_from_spacing(dtheta)
    return DEFAULT_GRID_N


def _kernel_grid(filterbank, prior, point, which, grid_n):
    """Grid values of psi and K = G M^{-1} G* for M = G* Lambda G or (CG)*(CG)."""
    theta = circle_grid(grid_n)
    z = np.exp(1j * theta)
    G = filterbank.eval_grid(z)
    Gh = G.conj().transpose(0, 2, 1)
    if which == "f":
        M = Gh @ point @ G
    elif which == "g":
        CG = np.matmul(point, G)
        M = CG.conj().transpose(0, 2, 1) @ CG
    else:
        raise ValueError(f"unknown moment map {which!r}")
    M = 0.5 * (M + M.conj().transpose(0, 2, 1))
    eigs = np.linalg.eigvalsh(M)
    min_eig = float(eigs.min())
    if not min_eig > 0.0:
        raise EvaluationError(
            "density boundary reached: G* (.) G has minimum grid eigenvalue "
            f"{min_eig:.6e}")
    K = G @ np.linalg.solve(M, Gh)
    psi = _psi_on(prior, theta)
    return psi, K


def moment_f_quadrature(filterbank, prior, Lam, grid_n=None, dtheta=None):
    """f(psi, Lambda) by Riemann summation on a uniform circle grid.

    The grid is equispaced, so the sum converges spectrally fast for the
    rational integrand; ``grid_n`` defaults to 4096.
    """
    N = _resolve_grid(grid_n, dtheta)
    psi, K = _kernel_grid(filterbank, prior, np.asarray(Lam), "f", N)
    val = _hermitize(np.tensordot(psi, K, axes=(0, 0)) / N)
    return coerce_field(val, filterbank.field, tol=QUAD_FIELD_TOL,
                        what="moment value")


def moment_g_quadrature(filterbank, prior, C, grid_n=None, dtheta=None):
    """g(psi, C) by Riemann summation on a uniform circle grid."""
    N = _resolve_grid(grid_n, dtheta)
    param = _as_param(filterbank, C)
    psi, K = _kernel_grid(filterbank, prior, param.C, "g", N)
    val = _hermitize(np.tensordot(psi, K, axes=(0, 0)) / N)
    return coerce_field(val, filterbank.field, tol=QUAD_FIELD_TOL,
                        what="moment value")


def apply_f2_quadrature(filterbank, prior, Lam, dLam, grid_n=None, dtheta=None):
    """Directional derivative of f in Lambda: -integral(psi K dLam K)."""
    N = _resolve_grid(grid_n, dtheta)
    psi, K = _kernel_grid(filterbank, prior, np.asarray(Lam), "f", N)
    val = -np.einsum("k,kab,bc,kcd->ad", psi, K, np.asarray(dLam), K) / N
    return coerce_field(_hermitize(val), filterbank.field, tol=QUAD_FIELD_TOL,
                        what="derivative value")


def apply_g2_quadrature(filterbank, prior, C, V, grid_n=None, dtheta=None):
    """Directional derivative of g in C: -integral(psi K (V*C + C*V) K)."""
    N = _resolve_grid(grid_n, dtheta)
    param = _as_param(filterbank, C)
    V = np.atleast_2d(np.asarray(V))
    D = V.conj().T @ param.C + param.C.conj().T @ V
    psi, K = _kernel_grid(filterbank, prior, param.C, "g", N)
    val = -np.einsum("k,kab,bc,kcd->ad", psi, K, D, K) / N
    return coerce_field(_hermitize(val), filterbank.field, tol=QUAD_FIELD_TOL,
                        what="derivative value")


# ---------------------------------------------------------------------------
# integration-free evaluation


def moment_g_statespace(filterbank, prior, C):
    """g(psi, C) without quadrature.

    G (z C G)^{-1} is stable with realization (Pi, B (CB)^{-1}, I, 0), so the
    integrand is the power spectrum of the cascade T = sigma G (z C G)^{-1}
    and g equals C_T P C_T* with P the controllability Gramian of T.
    """
    param = _as_param(filterbank, C)
    T = cascade(_sigma_system(prior), factor_inner_realization(filterbank, param))
    P = solve_dlyap(T.A, T.B @ T.B.conj().T)
    val = _hermitize(T.C @ P @ T.C.conj().T)
    return coerce_field(val, filterbank.field, what="moment value")


def _g2_exact(filterbank, prior, param, V):
    """-integral(psi K (V*C + C*V) K) for an admissible direction V.

    Admissible means G*(V*C + C*V)G > 0 on the circle.  The congruence
    (z C G)^{-*} [G*(V*C + C*V)G] (z C G)^{-1} = Z + Z* with Z = z V G (zCG)^{-1}
    turns the integrand into -psi T0 (Z + Z*) T0* for T0 = G (zCG)^{-1}; with
    W the outer factor of Z + Z* the value is minus the Gramian form of the
    cascade sigma T0 W.  Raises if the direction is not admissible.
    """
    inner = factor_inner_realization(filterbank, param)
    Bt = inner.B
    Z = StateSpaceSystem(param.Pi, Bt, V @ param.Pi, V @ Bt)
    W, _ = _left_outer_system(Z)
    T = cascade(_sigma_system(prior), series_product(inner, W))
    P = solve_dlyap(T.A, T.B @ T.B.conj().T)
    return -_hermitize(T.C @ P @ T.C.conj().T)


def apply_g2_statespace(filterbank, prior, C, V, shift="auto"):
    """Directional derivative of g in C, evaluated without quadrature.

    The exact route needs G*(V*C + C*V)G > 0 on the circle, which a generic
    direction violates.  Linearity fixes that: the derivative along C itself
    is -2 g(psi, C), so for a shifted direction V + r C,

        g'(psi, C; V) = g'(psi, C; V + r C) + 2 r g(psi, C),

    and some r >= 0 always makes the shifted direction admissible.  With
    ``shift="auto"`` (default) the smallest power-of-two multiple of a scale
    estimate is found by grid search; ``shift="none"`` evaluates V directly
    and propagates failure.
    """
    param = _as_param(filterbank, C)
    V = coerce_field(np.atleast_2d(np.asarray(V)), filterbank.field,
                     what="direction V")
    if V.shape != param.C.shape:
        raise ValueError(f"V must be {param.C.shape[0]}x{param.C.shape[1]}")
    if not np.any(V):
        return np.zeros((filterbank.n, filterbank.n),
                        dtype=float if filterbank.field == "real" else complex)
    if shift == "none":
        val = _g2_exact(filterbank, prior, param, V)
        return coerce_field(val, filterbank.field, what="derivative value")
    if shift != "auto":
        raise ValueError(f"shift must be 'auto' or 'none', got {shift!r}")

    # Each attempt checks positivity of the shifted Z + Z* on a circle grid
    # inside the factorization itself; a failed shift costs one grid scan.
    Cm = param.C
    unit = np.linalg.norm(V) / max(np.linalg.norm(Cm), 1e-300)
    schedule = [0.0] + [unit * 2.0 ** k for k in range(32)]
    last_exc = None
    for r in schedule:
        try:
            val = _g2_exact(filterbank, prior, param, V + r * Cm)
        except (SolverError, EvaluationError, FactorizationError,
                MembershipError) as exc:
            last_exc = exc
            continue
        if r:
            val = val + 2.0 * r * moment_g_statespace(filterbank, prior, param)
        return coerce_field(_hermitize(val), filterbank.field,
                            what="derivative value")
    raise SolverError(
        "no admissible shift found for the exact derivative route"
        + (f" (last failure: {last_exc})" if last_exc else ""))


def apply_g1_direction(filterbank, prior, C):
    """Derivative of t -> g((1-t) + t psi, C): the fixed value g(psi,C) - g(1,C).

    The moment map is affine in the density weight, so this direction does
    not depend on t; it is the inhomogeneous term of the path ODE.
    """
    param = _as_param(filterbank, C)
    return moment_g_statespace(filterbank, prior, param) \
        - moment_g_statespace(filterbank, None, param)


# ---------------------------------------------------------------------------
# coordinate charts


def _field_matrix_basis(m, n, field):
    out = []
    for i in range(m):
        for j in range(n):
            E = np.zeros((m, n))
            E[i, j] = 1.0
            out.append(E)
    if field == "complex":
        for i in range(m):
            for j in range(n):
                E = np.zeros((m, n), dtype=complex)
                E[i, j] = 1.0j
                out.append(E)
    return out


def build_range_gamma_basis(filterbank, drop_tol=BASIS_DROP_TOL):
    """Orthonormal basis of the range of the covariance operator.

    A Hermitian X lies in the range iff X - A X A* = B H + H* B* for some
    m x n matrix H; sweeping H over a basis and orthonormalizing the Stein
    solutions (Re-trace inner product, drop tolerance relative to the raw
    scale) spans the range.
    """
    A, B = filterbank.A, filterbank.B
    raw = []
    for H in _field_matrix_basis(filterbank.m, filterbank.n, filterbank.field):
        S = B @ H
        X = solve_dlyap(A, S + S.conj().T)
        raw.append(_hermitize(X))
    scale = max(np.linalg.norm(X) for X in raw)
    basis = []
    for X in raw:
        Y = X.copy()
        for _ in range(2):
            for E in basis:
                Y = Y - trace_inner(Y, E) * E
        nn = np.linalg.norm(Y)
        if nn > drop_tol * scale:
            basis.append(Y / nn)
    return tuple(basis)


def build_factor_basis(filterbank, anchor=None):
    """Orthonormal basis of the slice {V : VB lower triangular, real diagonal}.

    The slice is a real subspace of the m x n matrices; it is computed as the
    null space of the real-linear constraint map (above-diagonal entries of
    VB, and for the complex field the imaginary parts of its diagonal).

    When ``anchor`` is given (a matrix in the slice, typically the current
    factor parameter), the basis is rotated so its first element is the
    normalized anchor; the rotation is a Householder reflection in
    coordinate space, so orthonormality is preserved.
    """
    m, n = filterbank.m, filterbank.n
    B = filterbank.B
    real_field = filterbank.field == "real"
    pdim = m * n if real_field else 2 * m * n

    def unvec(p):
        if real_field:
            return p.reshape(m, n)
        return p[:m * n].reshape(m, n) + 1j * p[m * n:].reshape(m, n)

    def vec(V):
        if real_field:
            return np.asarray(V, dtype=float).ravel()
        V = np.asarray(V, dtype=complex)
        return np.concatenate([V.real.ravel(), V.imag.ravel()])

    rows = []
    for t in range(pdim):
        p = np.zeros(pdim)
        p[t] = 1.0
        VB = unvec(p) @ B
        entries = []
        for i in range(m):
            for j in range(i + 1, m):
                entries.append(VB[i, j].real)
                if not real_field:
                    entries.append(VB[i, j].imag)
        if not real_field:
            for i in range(m):
                entries.append(VB[i, i].imag)
        rows.append(entries)
    K = np.array(rows).T
    if K.size == 0:
        basis_params = np.eye(pdim)
    else:
        basis_params = null_space(K)

    if anchor is not None:
        if isinstance(anchor, FactorParameter):
            anchor = anchor.C
        a = vec(anchor)
        nrm = np.linalg.norm(a)
        if nrm <= 0:
            raise ValueError("anchor must be nonzero")
        a = a / nrm
        c = basis_params.T @ a
        if np.linalg.norm(basis_params @ c - a) > 1e-10:
            raise ValueError("anchor does not lie in the slice")
        c = c / np.linalg.norm(c)
        e1 = np.zeros_like(c)
        e1[0] = 1.0
        u = c - e1
        if np.linalg.norm(u) > 1e-14:
            Q = np.eye(c.size) - 2.0 * np.outer(u, u) / float(u @ u)
            basis_params = basis_params @ Q

    return tuple(unvec(basis_params[:, k]) for k in range(basis_params.shape[1]))


@dataclass(frozen=True)
class CoordinateChart:
    """Orthonormal coordinates for moment values and factor directions.

    range_basis spans the range of the covariance operator (Hermitian
    matrices), factor_basis spans the ambient factor slice; both are
    orthonormal under Re trace(X Y*), and both have length M.
    """

    filterbank: object
    range_basis: tuple
    factor_basis: tuple

    def __post_init__(self):
        if len(self.range_basis) != len(self.factor_basis):
            raise ValueError(
                f"basis size mismatch: range {len(self.range_basis)}, "
                f"factor {len(self.factor_basis)}")

    @property
    def dim(self):
        return len(self.factor_basis)

    def range_coords(self, X):
        return np.array([trace_inner(X, E) for E in self.range_basis])

    def range_from_coords(self, y):
        y = np.asarray(y, dtype=float).ravel()
        X = sum(c * E for c, E in zip(y, self.range_basis))
        return coerce_field(X, self.filterbank.field, what="range element")

    def project_range_gamma(self, X):
        """Orthogonal projection onto the range of the covariance operator."""
        return self.range_from_coords(self.range_coords(X))

    def range_residual(self, X):
        """Distance of X from the range, relative to its own norm."""
        nrm = float(np.linalg.norm(X))
        if nrm == 0.0:
            return 0.0
        return float(np.linalg.norm(X - self.project_range_gamma(X))) / nrm

    def factor_coords(self, V):
        return np.array([trace_inner(V, E) for E in self.factor_basis])

    def factor_from_coords(self, y):
        y = np.asarray(y, dtype=float).ravel()
        V = sum(c * E for c, E in zip(y, self.factor_basis))
        return coerce_field(V, self.filterbank.field, what="factor element")


def make_chart(filterbank, anchor=None):
    """CoordinateChart with matched bases; dimensions must agree.

    ``anchor`` rotates the factor basis so that element 0 points along the
    given matrix (see build_factor_basis).
    """
    rb = build_range_gamma_basis(filterbank)
    fb = build_factor_basis(filterbank, anchor=anchor)
    if len(rb) != len(fb):
        raise SolverError(
            f"range/slice dimensions disagree ({len(rb)} vs {len(fb)}); "
            "the filter bank violates the standing rank assumptions")
    return CoordinateChart(filterbank=filterbank, range_basis=rb, factor_basis=fb)


# ---------------------------------------------------------------------------
# Jacobians


def assemble_jacobian_matrix(chart, prior, point, which="g", route="quadrature",
                             grid_n=None, dtheta=None):
    """M x M real Jacobian of the moment map in chart coordinates.

    For which="g" the columns are derivatives along the factor basis at the
    parameter ``point`` (a matrix or FactorParameter); for which="f" along
    the range basis at ``point`` = Lambda.  Route "quadrature" sums the
    shared kernel on a circle grid; route "statespace" (g only) evaluates
    each column by the exact Gramian formula.
    """
    fb = chart.filterbank
    if which == "g":
        param = _as_param(fb, point)
        directions = chart.factor_basis
    elif which == "f":
        directions = chart.range_basis
    else:
        raise ValueError(f"unknown moment map {which!r}")

    if route == "quadrature":
        N = _resolve_grid(grid_n, dtheta)
        if which == "g":
            psi, K = _kernel_grid(fb, prior, param.C, "g", N)
            mats = [D.conj().T @ param.C + param.C.conj().T @ D
                    for D in directions]
        else:
            psi, K = _kernel_grid(fb, prior, np.asarray(point), "f", N)
            mats = list(directions)

        def column(Dm):
            return -np.einsum("k,kab,bc,kcd->ad", psi, K, Dm, K) / N

        cols = _ordered_map(column, mats)
    elif route == "statespace":
        if which != "g":
            raise ValueError(
                "the exact Gramian route only evaluates the factor-side map")

        def column(V):
            return apply_g2_statespace(fb, prior, param, V, shift="auto")

        cols = _ordered_map(column, directions)
    else:
        raise ValueError(f"unknown route {route!r}")

    J = np.empty((chart.dim, chart.dim))
    for j, Y in enumerate(cols):
        J[:, j] = chart.range_coords(Y)
    return J


def jacobian_condition_number(chart, prior, point, which="g",
                              route="quadrature", grid_n=None, dtheta=None):
    """Spectral condition number of the chart-coordinate Jacobian.

    Invariant (up to discretization error) under orthonormal changes of
    either basis, since those act by orthogonal matrices on each side.
    """
    J = assemble_jacobian_matrix(chart, prior, point, which=which, route=route,
                                 grid_n=grid_n, dtheta=dtheta)
    return float(np.linalg.cond(J))


@dataclass(frozen=True)
class JacobianSolveInfo:
    """Diagnostics of one linear-system solve against the g-Jacobian."""

    gram_cond: float
    verify_residual: float
    columns: int


def solve_jacobian_system(chart, prior, C, Y, gram_cond_limit=GRAM_COND_LIMIT,
                          verify_tol=VERIFY_TOL):
    """Solve g'(psi, C; V) = Y for a direction V in the factor slice.

    Each basis direction is pushed through the exact derivative route.  The
    coefficients are characterized by the Gram normal equations in the image
    space (inner product Re trace); because the range basis is orthonormal,
    those reduce to the square coordinate system J alpha = coords(Y) with
    Gram = J^T J, and the solve is done on J so the error grows with
    cond(J), not cond(J)^2.  The reported gram_cond is exactly the
    Gram-matrix condition number, cond(J)^2.

    The solve works entirely in range coordinates.  Derivative values lie in
    the range subspace; any component of Y orthogonal to it is roundoff of a
    covariance difference (absolute machine noise, so its share of ||Y||
    grows without bound as the rhs shrinks) and is discarded by the
    projection.  The assembled columns carry the evaluation-route error
    (~1e-11), which a plain solve amplifies by cond(J); iterative refinement
    with the defect computed by the exact operator removes it.  The
    convergence rate of the refinement degrades for right-hand sides near
    the evaluation noise floor (observed ~0.13 per round there, against
    machine-level rates at healthy scales), so the round cap is generous
    and the loop exits early on convergence or stall.  Each round costs one
    derivative evaluation.  The returned V is verified in-function by that
    same exact evaluation: ||g'(psi,C;V) - Y|| <= verify_tol ||Y|| in the
    range metric, skipped for Y = 0.

    Returns (V, JacobianSolveInfo).  Raises SolverError when the Gram
    conditioning exceeds ``gram_cond_limit`` or verification fails.
    """
    fb = chart.filterbank
    param = _as_param(fb, C)
    yr = chart.range_coords(Y)
    ynorm = float(np.linalg.norm(yr))
    if ynorm == 0.0:
        V = np.zeros_like(param.C)
        return V, JacobianSolveInfo(gram_cond=1.0, verify_residual=0.0,
                                    columns=chart.dim)

    def column(Vk):
        return apply_g2_statespace(fb, prior, param, Vk, shift="auto")

    cols = _ordered_map(column, chart.factor_basis)
    M = chart.dim
    J = np.empty((M, M))
    for k in range(M):
        J[:, k] = chart.range_coords(cols[k])
    condJ = float(np.linalg.cond(J))
    cond = condJ * condJ
    if not np.isfinite(cond) or cond > gram_cond_limit:
        raise SolverError(
            f"Gram system condition {cond:.3e} exceeds limit "
            f"{gram_cond_limit:.1e}")
    alpha, *_ = np.linalg.lstsq(J, yr, rcond=None)
    V = chart.factor_from_coords(alpha)
    resid = np.inf
    for _ in range(REFINE_ROUNDS):
        yhat = chart.range_coords(
            apply_g2_statespace(fb, prior, param, V, shift="auto"))
        prev = resid
        resid = float(np.linalg.norm(yhat - yr)) / ynorm
        if resid <= verify_tol:
            return V, JacobianSolveInfo(gram_cond=cond, verify_residual=resid,
                                        columns=M)
        if resid >= 0.9 * prev:
            break
        step, *_ = np.linalg.lstsq(J, yr - yhat, rcond=None)
        V = V + chart.factor_from_coords(step)
    raise SolverError(
        f"direction solve verification failed: relative residual "
        f"{resid:.3e} exceeds {verify_tol:.1e}")
