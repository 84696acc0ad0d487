"""Matrix equation solvers.

Discrete-time Stein/Lyapunov equations, two Riccati forms and the triangular
factorizations they need.  Two Riccati conventions appear:

* the lag-weight form  P = A*PA - A*PB (B*PB)^{-1} B*PA + Lambda,
  which carries no regularizing term inside B*PB and therefore cannot be fed
  to off-the-shelf solvers that require a nonsingular input weight; and
* the additive form  P = FPF* - (G + FPH*)(R + HPH*)^{-1}(G* + HPF*)  with
  R = J + J* > 0, used to factor Z(z) + Z*(z) for Z = H (zI-F)^{-1} G + J.

The lag-weight form is reduced exactly to the additive form: with Q solving
the Stein equation Q - A*QA = Lambda, the substitution P = Q + X turns the
first equation into the second with (F, G, H, J) = (A*, A*QB, B*, B*QB / 2),
and the closed loops correspond by conjugate transposition.  The additive
form is solved by a structure-preserving doubling iteration (default) with a
fixed-point iteration as fallback, then polished by Newton steps, each of
which is one Stein solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur, solve_triangular

from .errors import FactorizationError, MembershipError, SolverError
from .statespace import circle_grid, coerce_field, is_in_Lplus

__all__ = [
    "DareSolution",
    "solve_dlyap",
    "standard_cholesky",
    "reverse_cholesky",
    "solve_dare_appendix",
    "solve_dare_lambda",
]

DLYAP_RESIDUAL_TOL = 1e-11
DARE_RESIDUAL_TOL = 1e-10
ITER_UPDATE_TOL = 1e-13
ITER_BUDGET = 200
STRICT_TOL = 1e-12


def _hermitize(X):
    return 0.5 * (X + X.conj().T)


def _check_hermitian(X, name):
    X = np.atleast_2d(np.asarray(X))
    defect = float(np.max(np.abs(X - X.conj().T))) if X.size else 0.0
    if defect > STRICT_TOL * (1.0 + float(np.max(np.abs(X))) if X.size else 1.0):
        raise ValueError(f"{name} is not Hermitian (defect {defect:.3e})")
    return _hermitize(X)


def _spectral_radius(A):
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def solve_dlyap(A1, Q, method="auto"):
    """Solve the Stein equation R - A1 R A1* = Q for Hermitian Q.

    Parameters
    ----------
    A1 : (n, n) array, Schur stable (spectral radius < 1 - 1e-12)
    Q : (n, n) Hermitian array
    method : "auto", "schur" or "series"
        Schur back-substitution for moderate sizes (default), plain series
        summation R = sum_k A1^k Q A1*^k as fallback.

    Returns
    -------
    R : (n, n) Hermitian array with residual norm
        ||R - A1 R A1* - Q||_F <= 1e-11 (1 + ||R||_F).
    """
    A1 = np.atleast_2d(np.asarray(A1))
    Q = _check_hermitian(Q, "Q")
    n = A1.shape[0]
    if A1.shape != (n, n) or Q.shape != (n, n):
        raise ValueError(f"A1 and Q must both be {n}x{n}")
    if n == 0:
        return np.zeros((0, 0))
    rho = _spectral_radius(A1)
    if not rho < 1.0 - STRICT_TOL:
        raise MembershipError(
            f"Stein equation requires a Schur-stable A1; spectral radius {rho:.15g}")
    if method == "auto":
        method = "schur" if n <= 200 else "series"
    if method == "schur":
        R = _dlyap_schur(A1, Q)
    elif method == "series":
        R = _dlyap_series(A1, Q)
    else:
        raise ValueError(f"unknown method {method!r}")
    R = _hermitize(R)
    if not (np.iscomplexobj(A1) or np.iscomplexobj(Q)):
        R = R.real
    resid = float(np.linalg.norm(R - A1 @ R @ A1.conj().T - Q))
    if resid > DLYAP_RESIDUAL_TOL * (1.0 + float(np.linalg.norm(R))):
        raise SolverError(
            f"Stein solve residual {resid:.3e} exceeds tolerance",
            history=[resid])
    return R


def _dlyap_schur(A1, Q):
    # Triangularize: with A1 = U T U*, the equation becomes
    # Rt - T Rt T* = Qt in Rt = U* R U, solved column by column from the last.
    T, U = schur(A1.astype(complex), output="complex")
    Qt = U.conj().T @ Q @ U
    n = T.shape[0]
    Rt = np.zeros((n, n), dtype=complex)
    eye = np.eye(n)
    for k in range(n - 1, -1, -1):
        rhs = Qt[:, k].copy()
        if k < n - 1:
            acc = Rt[:, k + 1:] @ T[k, k + 1:].conj()
            rhs += T @ acc
        Rt[:, k] = solve_triangular(eye - np.conj(T[k, k]) * T, rhs, lower=False)
    return U @ Rt @ U.conj().T


def _dlyap_series(A1, Q, budget=100000):
    R = Q.copy()
    term = Q.copy()
    for _ in range(budget):
        term = A1 @ term @ A1.conj().T
        R += term
        if np.linalg.norm(term) <= 1e-17 * (1.0 + np.linalg.norm(R)):
            return R
    raise SolverError("Stein series summation did not converge")


def standard_cholesky(M):
    """Lower-triangular L with positive diagonal and L L* = M.

    Raises
    ------
    FactorizationError
        If M is not positive definite; carries the offending pivot index.
    """
    M = _check_hermitian(M, "M")
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pivot = M.shape[0] - 1
        for k in range(M.shape[0]):
            try:
                np.linalg.cholesky(M[:k + 1, :k + 1])
            except np.linalg.LinAlgError:
                pivot = k
                break
        raise FactorizationError(
            f"matrix is not positive definite (pivot {pivot})", pivot=pivot
        ) from None


def reverse_cholesky(M):
    """Lower-triangular L with positive diagonal and L* L = M.

    Factors the exchange-permuted matrix with the standard Cholesky and
    permutes back: with E the anti-identity and K K* = E M E, the factor is
    L = E K* E.
    """
    M = np.atleast_2d(np.asarray(M))
    E = np.fliplr(np.eye(M.shape[0]))
    K = standard_cholesky(E @ M @ E)
    return E @ K.conj().T @ E


@dataclass(frozen=True)
class DareSolution:
    """Solution record of a Riccati solve.

    P is the stabilizing solution, L the triangular factor of the innovation
    block (convention depends on the equation: L*L = B*PB for the lag-weight
    form, LL* = R + HPH* for the additive form), closed_loop the resulting
    Schur-stable iteration matrix, residual_norm the Frobenius norm of the
    defining equation's defect.
    """

    P: np.ndarray
    L: np.ndarray
    closed_loop: np.ndarray
    residual_norm: float
    iterations: int
    method: str


def _appendix_residual(F, G, H, R, P):
    Om = R + H @ P @ H.conj().T
    K = np.linalg.solve(Om.conj().T, (G + F @ P @ H.conj().T).conj().T).conj().T
    return F @ P @ F.conj().T - K @ Om @ K.conj().T - P, Om, K


def _sda_appendix(F, G, H, R, tol, budget):
    """Doubling iteration for the additive-form Riccati equation.

    The equation is dualized to standard control form (A = F*, B = H*,
    S = G, Q = 0), the cross term removed exactly, and the SSF-I doubling
    recursion applied; the H-iterate converges to the stabilizing solution.
    """
    Ad = F.conj().T
    Bd = H.conj().T
    RiS = np.linalg.solve(R, G.conj().T)
    RiB = np.linalg.solve(R, Bd.conj().T)
    Ak = Ad - Bd @ RiS
    Gk = _hermitize(Bd @ RiB)
    Hk = _hermitize(-G @ RiS)
    eye = np.eye(Ak.shape[0])
    for it in range(1, budget + 1):
        W = eye + Gk @ Hk
        try:
            WA = np.linalg.solve(W, Ak)
            WG = np.linalg.solve(W, Gk)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"doubling iterate became singular: {exc}") from exc
        Hn = _hermitize(Hk + Ak.conj().T @ Hk @ WA)
        Gk = _hermitize(Gk + Ak @ WG @ Ak.conj().T)
        Ak = Ak @ WA
        delta = np.linalg.norm(Hn - Hk) / (1.0 + np.linalg.norm(Hn))
        Hk = Hn
        if delta <= tol:
            return Hk, it
    raise SolverError(
        f"doubling iteration did not converge in {budget} steps",
        history=[float(delta)])


def _fixed_point_appendix(F, G, H, R, tol, budget):
    P = np.zeros_like(F, dtype=np.result_type(F, G, H, R, float))
    history = []
    for it in range(1, budget + 1):
        Om = _hermitize(R + H @ P @ H.conj().T)
        try:
            np.linalg.cholesky(Om)
        except np.linalg.LinAlgError:
            raise SolverError(
                "fixed-point iterate left the feasible region "
                f"(R + HPH* indefinite at iteration {it})", history=history)
        K = np.linalg.solve(Om.conj().T, (G + F @ P @ H.conj().T).conj().T).conj().T
        Pn = _hermitize(F @ P @ F.conj().T - K @ Om @ K.conj().T)
        delta = np.linalg.norm(Pn - P) / (1.0 + np.linalg.norm(Pn))
        history.append(float(delta))
        P = Pn
        if delta <= tol:
            return P, it
    raise SolverError(
        f"fixed-point iteration did not converge in {budget} steps",
        history=history)


def _additive_positivity(F, G, H, J, grid_n=1024):
    """Min grid eigenvalue of Z + Z* for Z = H (zI - F)^{-1} G + J."""
    theta = circle_grid(grid_n)
    z = np.exp(1j * theta)
    nz = F.shape[0]
    if nz == 0:
        S = J + J.conj().T
        return float(np.min(np.linalg.eigvalsh(0.5 * (S + S.conj().T))))
    X = np.linalg.solve(z[:, None, None] * np.eye(nz) - F,
                        np.broadcast_to(G.astype(complex), (z.size,) + G.shape))
    Zv = H @ X + J
    S = Zv + Zv.conj().transpose(0, 2, 1)
    S = 0.5 * (S + S.conj().transpose(0, 2, 1))
    return float(np.min(np.linalg.eigvalsh(S)))


def solve_dare_appendix(F, G, H, J, method="doubling",
                        tol=ITER_UPDATE_TOL, budget=ITER_BUDGET,
                        check_positivity=True, grid_n=1024):
    """Stabilizing solution of the additive-form Riccati equation.

    Solves P = FPF* - (G + FPH*)(R + HPH*)^{-1}(G* + HPF*) with R = J + J*,
    for Z(z) = H (zI - F)^{-1} G + J with Z + Z* > 0 on the unit circle (the
    positivity is prechecked on a ``grid_n``-point grid).

    Parameters
    ----------
    F : (nz, nz) Schur-stable array
    G : (nz, mz) array
    H : (mz, nz) array
    J : (mz, mz) array with J + J* positive definite
    method : "doubling" (default) or "fixed-point"

    Returns
    -------
    DareSolution
        With LL* = R + HPH* (standard lower Cholesky) and closed loop
        F - (G + FPH*)(R + HPH*)^{-1} H.

    Notes
    -----
    When H = 0 the additive part of Z is constant and every P-dependent term
    drops out of the factorization; the solver short-circuits to P = 0,
    L from LL* = R, and reports the factorization defect (zero) as residual.
    """
    F = np.atleast_2d(np.asarray(F))
    G = np.atleast_2d(np.asarray(G))
    H = np.atleast_2d(np.asarray(H))
    J = np.atleast_2d(np.asarray(J))
    nz = F.shape[0]
    mz = J.shape[0]
    if F.shape != (nz, nz) or G.shape != (nz, mz) or H.shape != (mz, nz) \
            or J.shape != (mz, mz):
        raise ValueError("inconsistent shapes for (F, G, H, J)")
    rho = _spectral_radius(F)
    if nz and not rho < 1.0 - STRICT_TOL:
        raise MembershipError(
            f"F must be Schur stable; spectral radius {rho:.15g}")
    R = _hermitize(J + J.conj().T)
    rmin = float(np.min(np.linalg.eigvalsh(R)))
    if not rmin > 0.0:
        raise FactorizationError(
            f"J + J* is not positive definite (min eigenvalue {rmin:.3e})")
    if check_positivity:
        pmin = _additive_positivity(F, G, H, J, grid_n=grid_n)
        if not pmin > 0.0:
            raise MembershipError(
                "Z + Z* is not positive on the unit circle "
                f"(min grid eigenvalue {pmin:.6e})")

    scale = (1.0 + np.linalg.norm(G)) / (1.0 + np.linalg.norm(R))
    if nz == 0 or np.linalg.norm(H) * scale <= 1e-13:
        L = standard_cholesky(R)
        return DareSolution(P=np.zeros((nz, nz)), L=L, closed_loop=F.copy(),
                            residual_norm=0.0, iterations=0, method="degenerate")

    if method == "doubling":
        try:
            P, iters = _sda_appendix(F, G, H, R, tol, budget)
            used = "doubling"
        except SolverError:
            P, iters = _fixed_point_appendix(F, G, H, R, tol, budget)
            used = "fixed-point"
    elif method == "fixed-point":
        P, iters = _fixed_point_appendix(F, G, H, R, tol, budget)
        used = "fixed-point"
    else:
        raise ValueError(f"unknown method {method!r}")

    # Newton polish: each step solves a Stein equation in the current
    # closed loop; quadratic, so one or two steps reach machine residual.
    history = []
    for _ in range(5):
        resid, Om, K = _appendix_residual(F, G, H, R, P)
        rnorm = float(np.linalg.norm(resid))
        history.append(rnorm)
        if rnorm <= 1e-14 * (1.0 + float(np.linalg.norm(P))):
            break
        Kcl = F - K @ H
        if not _spectral_radius(Kcl) < 1.0:
            break
        try:
            P = _hermitize(P + solve_dlyap(Kcl, _hermitize(resid)))
        except (SolverError, MembershipError):
            break

    resid, Om, K = _appendix_residual(F, G, H, R, P)
    rnorm = float(np.linalg.norm(resid))
    if rnorm > DARE_RESIDUAL_TOL * (1.0 + float(np.linalg.norm(P))):
        raise SolverError(
            f"Riccati residual {rnorm:.3e} exceeds tolerance "
            f"{DARE_RESIDUAL_TOL:.1e} (1 + ||P||)", history=history)
    L = standard_cholesky(_hermitize(Om))
    Kcl = F - K @ H
    rho_cl = _spectral_radius(Kcl)
    if not rho_cl < 1.0 - STRICT_TOL:
        raise SolverError(
            f"computed solution is not stabilizing (closed-loop spectral "
            f"radius {rho_cl:.15g})", history=history)
    if not any(np.iscomplexobj(X) for X in (F, G, H, J)):
        P, L, Kcl = P.real, L.real, Kcl.real
    return DareSolution(P=P, L=L, closed_loop=Kcl, residual_norm=rnorm,
                        iterations=iters, method=used)


def _lambda_residual(A, B, Lam, P):
    M = _hermitize(B.conj().T @ P @ B)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise FactorizationError(
            "B*PB is not positive definite for the current iterate")
    Cg = np.linalg.solve(M, B.conj().T @ P @ A)
    resid = A.conj().T @ P @ A - (B.conj().T @ P @ A).conj().T @ Cg + Lam - P
    Pi = A - B @ Cg
    return _hermitize(resid), M, Pi


def _fixed_point_lambda(A, B, Lam, tol, budget):
    P = Lam.copy()
    history = []
    for it in range(1, budget + 1):
        M = _hermitize(B.conj().T @ P @ B)
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise SolverError(
                "fixed-point iterate has indefinite B*PB at iteration "
                f"{it}", history=history)
        W = np.linalg.solve(M, B.conj().T @ P @ A)
        Pn = _hermitize(
            A.conj().T @ P @ A - (B.conj().T @ P @ A).conj().T @ W + Lam)
        delta = np.linalg.norm(Pn - P) / (1.0 + np.linalg.norm(Pn))
        history.append(float(delta))
        P = Pn
        if delta <= tol:
            return P, it
    raise SolverError(
        f"fixed-point iteration did not converge in {budget} steps",
        history=history)


def solve_dare_lambda(filterbank, Lam, method="doubling", grid_n=1024,
                      check_membership=True):
    """Stabilizing solution of P = A*PA - A*PB (B*PB)^{-1} B*PA + Lambda.

    Parameters
    ----------
    filterbank : FilterBank
    Lam : (n, n) Hermitian array whose induced density G* Lambda G is
        positive on the unit circle
    method : "doubling" (reduction to the additive form, then doubling) or
        "fixed-point" (direct iteration from X0 = Lambda)
    grid_n : grid size for the membership precheck
    check_membership : skip the grid precheck when False

    Returns
    -------
    DareSolution
        With B*PB = L*L (reverse Cholesky: L lower triangular with positive
        diagonal) and closed loop A - B (B*PB)^{-1} B*PA.
    """
    A, B = filterbank.A, filterbank.B
    Lam = _check_hermitian(Lam, "Lambda")
    if Lam.shape != (filterbank.n, filterbank.n):
        raise ValueError(f"Lambda must be {filterbank.n}x{filterbank.n}")
    if check_membership:
        diag = is_in_Lplus(filterbank, Lam, grid_n=grid_n)
        if not diag:
            raise MembershipError(
                "G* Lambda G is not positive on the unit circle "
                f"(min grid eigenvalue {diag.min_eigenvalue:.6e})")

    if method == "doubling":
        # Exact reduction: Q - A*QA = Lambda, then P = Q + X with X the
        # stabilizing solution of the additive form for
        # (F, G, H, J) = (A*, A*QB, B*, B*QB / 2).
        Q = solve_dlyap(A.conj().T, Lam)
        app = solve_dare_appendix(A.conj().T, A.conj().T @ Q @ B, B.conj().T,
                                  0.5 * B.conj().T @ Q @ B)
        P = _hermitize(Q + app.P)
        iters = app.iterations
        used = "doubling" if app.method != "fixed-point" else "fixed-point"
    elif method == "fixed-point":
        P, iters = _fixed_point_lambda(A, B, Lam, ITER_UPDATE_TOL, ITER_BUDGET)
        used = "fixed-point"
    else:
        raise ValueError(f"unknown method {method!r}")

    # Newton polish in the lag-weight form itself: the linearization at P is
    # Delta - Pi* Delta Pi with Pi the closed loop, again one Stein solve.
    history = []
    for _ in range(5):
        resid, M, Pi = _lambda_residual(A, B, Lam, P)
        rnorm = float(np.linalg.norm(resid))
        history.append(rnorm)
        if rnorm <= 1e-14 * (1.0 + float(np.linalg.norm(P))):
            break
        if not _spectral_radius(Pi) < 1.0:
            break
        try:
            P = _hermitize(P + solve_dlyap(Pi.conj().T, resid))
        except (SolverError, MembershipError):
            break

    resid, M, Pi = _lambda_residual(A, B, Lam, P)
    rnorm = float(np.linalg.norm(resid))
    if rnorm > DARE_RESIDUAL_TOL * (1.0 + float(np.linalg.norm(P))):
        raise SolverError(
            f"Riccati residual {rnorm:.3e} exceeds tolerance "
            f"{DARE_RESIDUAL_TOL:.1e} (1 + ||P||)", history=history)
    rho_cl = _spectral_radius(Pi)
    if not rho_cl < 1.0 - STRICT_TOL:
        raise SolverError(
            f"computed solution is not stabilizing (closed-loop spectral "
            f"radius {rho_cl:.15g})", history=history)
    L = reverse_cholesky(M)
    P = coerce_field(P, filterbank.field, what="Riccati solution")
    L = coerce_field(L, filterbank.field, what="Riccati factor")
    Pi = coerce_field(Pi, filterbank.field, what="Riccati closed loop")
    return DareSolution(P=P, L=L, closed_loop=Pi, residual_norm=rnorm,
                        iterations=iters, method=used)
