"""Discrete-time state-space building blocks.

Systems are causal transfer functions W(z) = C (zI - A)^{-1} B + D evaluated
on and outside the unit circle.  The module provides the bank of rational
filters G(z) = (zI - A)^{-1} B that defines the estimation problem, the
scalar prior spectra psi = |sigma|^2, and the stable factor parameters C
whose induced closed loop Pi = A - B (CB)^{-1} C A is Schur stable.

All sets come with explicit numerical tolerances: strict inequalities use a
1e-12 margin throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, MembershipError

__all__ = [
    "StateSpaceSystem",
    "FilterBank",
    "PriorSpectrum",
    "FactorParameter",
    "CplusDiagnostics",
    "LplusDiagnostics",
    "make_covariance_extension_filter",
    "prior_from_polynomial",
    "prior_from_outer",
    "constant_prior",
    "eval_transfer",
    "cascade",
    "series_product",
    "factor_inner_realization",
    "is_in_Cplus",
    "is_in_Lplus",
    "circle_grid",
    "grid_size_from_spacing",
    "matrix_to_json",
    "matrix_from_json",
]

STRICT_TOL = 1e-12


def _as_matrix(x, name):
    a = np.atleast_2d(np.asarray(x))
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {a.shape}")
    return a


def coerce_field(x, fieldname, tol=STRICT_TOL, what="matrix"):
    """Return ``x`` as a real array when ``fieldname == 'real'``.

    Asserts that stray imaginary parts are below ``tol`` relative to the
    matrix scale before discarding them; complex-field inputs pass through.
    """
    x = np.asarray(x)
    if fieldname == "real":
        if np.iscomplexobj(x):
            scale = 1.0 + float(np.max(np.abs(x))) if x.size else 1.0
            worst = float(np.max(np.abs(x.imag))) if x.size else 0.0
            if worst > tol * scale:
                raise ValueError(
                    f"{what}: imaginary part {worst:.3e} exceeds the real-field "
                    f"tolerance {tol:.1e} * {scale:.3e}"
                )
            return np.ascontiguousarray(x.real)
        return x
    return x


def circle_grid(n):
    """Equidistant angles on (-pi, pi]: theta_k = -pi + k * 2 pi / n, k = 1..n."""
    if n < 1:
        raise ValueError("grid size must be positive")
    step = 2.0 * np.pi / n
    return -np.pi + step * np.arange(1, n + 1)

def grid_size_from_spacing(dtheta):
    """Number of grid points whose uniform spacing best matches ``dtheta``.

    The returned n tiles the circle exactly (n * (2 pi / n) = 2 pi); a literal
    non-divisor spacing would leave a coverage gap on (-pi, pi].
    """
    if not dtheta > 0:
        raise ValueError("dtheta must be positive")
    return max(1, int(round(2.0 * np.pi / float(dtheta))))


@dataclass(frozen=True)
class StateSpaceSystem:
    """Causal system W(z) = C (zI - A)^{-1} B + D with Schur-stable A."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        B = np.atleast_2d(np.asarray(self.B))
        C = np.atleast_2d(np.asarray(self.C))
        D = np.atleast_2d(np.asarray(self.D))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise ValueError(f"C has {C.shape[1]} columns, expected {n}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError(
                f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}"
            )
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, val)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.B.shape[1]

    @property
    def n_outputs(self):
        return self.C.shape[0]

    def spectral_radius(self):
        if self.n_states == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def is_stable(self, margin=STRICT_TOL):
        return self.spectral_radius() < 1.0 - margin

    def eval(self, z):
        """Evaluate W(z) at a single complex point."""
        return eval_transfer(self, z)

    def eval_grid(self, z):
        """Evaluate W at a 1-d array of points; returns shape (len(z), p, m)."""
        z = np.asarray(z, dtype=complex).ravel()
        if self.n_states == 0:
            return np.broadcast_to(
                self.D.astype(complex), (z.size,) + self.D.shape
            ).copy()
        n = self.n_states
        zI = z[:, None, None] * np.eye(n)
        try:
            X = np.linalg.solve(zI - self.A, np.broadcast_to(
                self.B.astype(complex), (z.size,) + self.B.shape))
        except np.linalg.LinAlgError as exc:
            raise EvaluationError(
                f"zI - A singular on the evaluation grid: {exc}") from exc
        return self.C @ X + self.D


def eval_transfer(system, z):
    """Evaluate C (zI - A)^{-1} B + D at the point ``z``.

    Raises
    ------
    EvaluationError
        If ``zI - A`` is singular at ``z`` (the message names the point).
    """
    if system.n_states == 0:
        return system.D.copy()
    n = system.n_states
    try:
        X = np.linalg.solve(complex(z) * np.eye(n) - system.A, system.B)
    except np.linalg.LinAlgError as exc:
        raise EvaluationError(f"zI - A is singular at z = {z!r}") from exc
    return system.C @ X + system.D


def series_product(left, right):
    """Realization of the matrix product ``left(z) @ right(z)``.

    The right factor acts on the input first.  State dimension is the sum of
    the factors' state dimensions.
    """
    if left.n_inputs != right.n_outputs:
        raise ValueError(
            f"inner dimensions differ: left has {left.n_inputs} inputs, "
            f"right has {right.n_outputs} outputs"
        )
    n1, n2 = left.n_states, right.n_states
    dtype = np.result_type(left.A.dtype, right.A.dtype,
                           left.D.dtype, right.D.dtype, float)
    A = np.zeros((n1 + n2, n1 + n2), dtype=dtype)
    A[:n1, :n1] = left.A
    A[:n1, n1:] = left.B @ right.C
    A[n1:, n1:] = right.A
    B = np.vstack([left.B @ right.D, right.B]).astype(dtype)
    C = np.hstack([left.C, left.D @ right.C]).astype(dtype)
    D = (left.D @ right.D).astype(dtype)
    return StateSpaceSystem(A, B, C, D)


def cascade(outer, inner):
    """Realization of ``outer(z) * inner(z)`` for a scalar outer factor.

    The scalar factor is applied per input channel of ``inner``, so the state
    dimension is ``inner.n_states + outer.n_states * inner.n_inputs`` (for a
    multi-input inner system the per-channel copies are unavoidable: the
    product has that many poles counting multiplicity).
    """
    if outer.n_inputs != 1 or outer.n_outputs != 1:
        raise ValueError("outer factor must be scalar (1x1)")
    m = inner.n_inputs
    if outer.n_states == 0:
        d = outer.D.reshape(())
        return StateSpaceSystem(inner.A, inner.B * d, inner.C, inner.D * d)
    eye_m = np.eye(m)
    blowup = StateSpaceSystem(
        np.kron(outer.A, eye_m),
        np.kron(outer.B, eye_m),
        np.kron(outer.C, eye_m),
        np.kron(outer.D, eye_m),
    )
    return series_product(inner, blowup)


def _reachability_rank(A, B, rtol=1e-9):
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    R = np.hstack(blocks)
    s = np.linalg.svd(R, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass(frozen=True)
class FilterBank:
    """Bank of rational filters G(z) = (zI - A)^{-1} B.

    Parameters
    ----------
    A : (n, n) array, Schur stable (spectral radius < 1 - 1e-12)
    B : (n, m) array, full column rank, with (A, B) reachable
    field : "real" or "complex"
    """

    A: np.ndarray
    B: np.ndarray
    field: str = "real"

    def __post_init__(self):
        if self.field not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        A = coerce_field(_as_matrix(self.A, "A"), self.field, what="filter A")
        B = coerce_field(_as_matrix(self.B, "B"), self.field, what="filter B")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n}")
        if B.shape[1] > n:
            raise ValueError("B cannot have more columns than A has rows")
        rho = float(np.max(np.abs(np.linalg.eigvals(A)))) if n else 0.0
        if not rho < 1.0 - STRICT_TOL:
            raise MembershipError(
                f"filter A is not Schur stable: spectral radius {rho:.15g}")
        sv = np.linalg.svd(B, compute_uv=False)
        if sv.size == 0 or sv[-1] <= 1e-9 * sv[0]:
            raise MembershipError("filter B is not of full column rank")
        if _reachability_rank(A, B) < n:
            raise MembershipError("(A, B) is not reachable")
        A = A.copy()
        B = B.copy()
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def as_system(self):
        """G as a state-space system (C = I, D = 0); n outputs, m inputs."""
        return StateSpaceSystem(
            self.A, self.B, np.eye(self.n), np.zeros((self.n, self.m)))

    def eval(self, z):
        """G(z) at a single point."""
        try:
            return np.linalg.solve(
                complex(z) * np.eye(self.n) - self.A, self.B)
        except np.linalg.LinAlgError as exc:
            raise EvaluationError(f"zI - A is singular at z = {z!r}") from exc

    def eval_grid(self, z):
        """G on a 1-d array of points; returns shape (len(z), n, m)."""
        z = np.asarray(z, dtype=complex).ravel()
        zI = z[:, None, None] * np.eye(self.n)
        return np.linalg.solve(
            zI - self.A,
            np.broadcast_to(self.B.astype(complex), (z.size,) + self.B.shape),
        )


def make_covariance_extension_filter(m, p, field="real"):
    """Filter bank whose moments are the covariance lags of an m-variate process.

    A is the nilpotent block shift with identity blocks on the first block
    superdiagonal, B stacks zeros over the identity; G(z) stacks
    z^{-p-1} I_m, ..., z^{-1} I_m (deepest lag first), with n = m (p + 1).
    """
    if m < 1 or p < 0:
        raise ValueError("need m >= 1 and p >= 0")
    n = m * (p + 1)
    A = np.zeros((n, n))
    for i in range(p):
        A[i * m:(i + 1) * m, (i + 1) * m:(i + 2) * m] = np.eye(m)
    B = np.zeros((n, m))
    B[p * m:, :] = np.eye(m)
    return FilterBank(A, B, field=field)


@dataclass(frozen=True)
class PriorSpectrum:
    """Scalar prior density psi = |sigma|^2 given by its outer factor sigma.

    kind is "constant", "polynomial" (sigma a minimum-phase FIR, coefficients
    stored highest lag last) or "rational".  The density is validated to be
    strictly positive on a 1024-point circle grid at construction.
    """

    sigma: StateSpaceSystem
    kind: str = "rational"
    coefficients: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "polynomial", "rational"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.sigma.n_inputs != 1 or self.sigma.n_outputs != 1:
            raise ValueError("sigma must be a scalar system")
        if not self.sigma.is_stable():
            raise MembershipError(
                "sigma is not Schur stable: spectral radius "
                f"{self.sigma.spectral_radius():.15g}")
        vals = self.psi_values(circle_grid(1024))
        lo = float(vals.min())
        if not lo > 0.0:
            raise MembershipError(
                f"prior density is not positive on the unit circle "
                f"(grid minimum {lo:.3e})")
        if self.coefficients is not None:
            c = np.atleast_1d(np.asarray(self.coefficients)).copy()
            c.setflags(write=False)
            object.__setattr__(self, "coefficients", c)

    def sigma_values(self, theta):
        """sigma(e^{i theta}) on a grid of angles, as a 1-d complex array."""
        z = np.exp(1j * np.asarray(theta, dtype=float).ravel())
        return self.sigma.eval_grid(z)[:, 0, 0]

    def psi_values(self, theta):
        """psi(theta) = |sigma(e^{i theta})|^2 on a grid of angles."""
        s = self.sigma_values(theta)
        return (s * s.conj()).real

    @property
    def is_constant(self):
        return self.kind == "constant" or self.sigma.n_states == 0


def _fir_system(b):
    b = np.atleast_1d(np.asarray(b))
    q = b.size - 1
    dtype = complex if np.iscomplexobj(b) else float
    if q == 0:
        zero = np.zeros((0, 0), dtype=dtype)
        return StateSpaceSystem(zero, np.zeros((0, 1), dtype=dtype),
                                np.zeros((1, 0), dtype=dtype),
                                np.array([[b[0]]], dtype=dtype))
    A = np.zeros((q, q), dtype=dtype)
    A[1:, :-1] = np.eye(q - 1)
    B = np.zeros((q, 1), dtype=dtype)
    B[0, 0] = 1.0
    C = np.asarray(b[1:], dtype=dtype).reshape(1, q)
    D = np.array([[b[0]]], dtype=dtype)
    return StateSpaceSystem(A, B, C, D)


def constant_prior(value=1.0):
    """The flat prior psi = value (value > 0)."""
    value = float(value)
    if not value > 0.0:
        raise MembershipError("constant prior must be positive")
    s = np.sqrt(value)
    return PriorSpectrum(_fir_system([s]), kind="constant",
                         coefficients=np.array([s]))


def prior_from_polynomial(b):
    """Prior psi = |b(z)|^2 for an FIR b(z) = b_0 + b_1 z^{-1} + ... + b_q z^{-q}.

    b must be minimum phase: b_0 != 0 and every root of b (as a polynomial in
    z^{-1}) of modulus < 1.  Otherwise a MembershipError reports the
    offending root.
    """
    b = np.atleast_1d(np.asarray(b))
    if b.ndim != 1 or b.size == 0:
        raise ValueError("b must be a non-empty 1-d coefficient array")
    if abs(b[0]) <= STRICT_TOL:
        raise MembershipError(
            "leading coefficient b_0 vanishes: b has a root at infinity "
            "in z^{-1} and is not minimum phase")
    if b.size > 1:
        roots = np.roots(b)
        mods = np.abs(roots)
        worst = int(np.argmax(mods))
        if mods[worst] >= 1.0 - STRICT_TOL:
            raise MembershipError(
                f"b is not minimum phase: root {roots[worst]:.15g} has "
                f"modulus {mods[worst]:.15g} >= 1")
    return PriorSpectrum(_fir_system(b), kind="polynomial", coefficients=b)


def prior_from_outer(system):
    """Prior psi = |sigma|^2 for a scalar rational outer factor sigma.

    sigma must be scalar, Schur stable, with nonzero feedthrough and all
    transmission zeros strictly inside the unit circle.
    """
    if system.n_inputs != 1 or system.n_outputs != 1:
        raise ValueError("sigma must be a scalar system")
    d = complex(system.D.reshape(()))
    if abs(d) <= STRICT_TOL:
        raise MembershipError(
            "sigma has zero feedthrough (a transmission zero at infinity) "
            "and is not outer")
    if system.n_states:
        zero_dyn = system.A - system.B @ system.C / d
        zmods = np.abs(np.linalg.eigvals(zero_dyn))
        worst = float(zmods.max())
        if worst >= 1.0 - STRICT_TOL:
            raise MembershipError(
                f"sigma is not outer: transmission zero of modulus {worst:.15g}")
    return PriorSpectrum(system, kind="rational")


@dataclass(frozen=True)
class CplusDiagnostics:
    """Membership report for the stable factor set."""

    member: bool
    spectral_radius: float
    max_upper_abs: float
    min_diag_real: float
    max_diag_imag: float
    failures: tuple = field(default_factory=tuple)

    def __bool__(self):
        return self.member


@dataclass(frozen=True)
class LplusDiagnostics:
    """Membership report for positivity of G* Lambda G on the circle."""

    member: bool
    min_eigenvalue: float
    grid_n: int

    def __bool__(self):
        return self.member


def is_in_Cplus(filterbank, C):
    """Check membership of C in the stable factor set.

    Requires CB lower triangular with real positive diagonal (entries above
    the diagonal of modulus <= 1e-12, diagonal imaginary part <= 1e-12, real
    part > 1e-12) and spectral radius of Pi = A - B (CB)^{-1} C A below
    1 - 1e-12.  Returns diagnostics that are truthy iff all conditions hold.
    """
    C = _as_matrix(C, "C")
    m, n = filterbank.m, filterbank.n
    if C.shape != (m, n):
        raise ValueError(f"C must be {m}x{n}, got {C.shape}")
    CB = C @ filterbank.B
    failures = []
    if m > 1:
        upper = CB[np.triu_indices(m, k=1)]
        max_upper = float(np.max(np.abs(upper)))
    else:
        max_upper = 0.0
    diag = np.diag(CB)
    min_diag_real = float(np.min(diag.real))
    max_diag_imag = float(np.max(np.abs(diag.imag))) if np.iscomplexobj(CB) else 0.0
    if max_upper > STRICT_TOL:
        failures.append(
            f"CB is not lower triangular (max above-diagonal modulus {max_upper:.3e})")
    if max_diag_imag > STRICT_TOL:
        failures.append(
            f"diagonal of CB is not real (max imaginary part {max_diag_imag:.3e})")
    if not min_diag_real > STRICT_TOL:
        failures.append(
            f"diagonal of CB is not positive (min real part {min_diag_real:.3e})")
    rho = np.inf
    if np.abs(np.linalg.det(CB)) > 0:
        Pi = filterbank.A - filterbank.B @ np.linalg.solve(CB, C @ filterbank.A)
        rho = float(np.max(np.abs(np.linalg.eigvals(Pi))))
        if not rho < 1.0 - STRICT_TOL:
            failures.append(
                f"closed loop is not Schur stable (spectral radius {rho:.15g})")
    else:
        failures.append("CB is singular; closed loop undefined")
    return CplusDiagnostics(
        member=not failures,
        spectral_radius=rho,
        max_upper_abs=max_upper,
        min_diag_real=min_diag_real,
        max_diag_imag=max_diag_imag,
        failures=tuple(failures),
    )


def is_in_Lplus(filterbank, Lam, grid_n=1024):
    """Check G(z)* Lambda G(z) > 0 on a circle grid of ``grid_n`` points.

    Lambda must be Hermitian to tolerance 1e-12.  Returns diagnostics with
    the minimum eigenvalue found over the grid.
    """
    Lam = _as_matrix(Lam, "Lambda")
    n = filterbank.n
    if Lam.shape != (n, n):
        raise ValueError(f"Lambda must be {n}x{n}, got {Lam.shape}")
    herm_defect = float(np.max(np.abs(Lam - Lam.conj().T)))
    if herm_defect > STRICT_TOL * (1.0 + float(np.max(np.abs(Lam)))):
        raise ValueError(
            f"Lambda is not Hermitian (defect {herm_defect:.3e})")
    theta = circle_grid(grid_n)
    G = filterbank.eval_grid(np.exp(1j * theta))
    M = np.einsum("kij,jl,klm->kim", G.conj().transpose(0, 2, 1), Lam, G)
    M = 0.5 * (M + M.conj().transpose(0, 2, 1))
    eigs = np.linalg.eigvalsh(M)
    min_eig = float(eigs.min())
    return LplusDiagnostics(member=min_eig > 0.0, min_eigenvalue=min_eig,
                            grid_n=grid_n)


@dataclass(frozen=True)
class FactorParameter:
    """A point C of the stable factor set, bound to its filter bank.

    Construction validates membership and caches CB and the closed loop
    Pi = A - B (CB)^{-1} C A.
    """

    filterbank: FilterBank
    C: np.ndarray
    CB: np.ndarray = field(init=False, repr=False)
    Pi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        C = coerce_field(_as_matrix(self.C, "C"), self.filterbank.field,
                         what="factor parameter C")
        diag = is_in_Cplus(self.filterbank, C)
        if not diag:
            raise MembershipError(
                "C is not in the stable factor set: " + "; ".join(diag.failures))
        CB = C @ self.filterbank.B
        Pi = self.filterbank.A - self.filterbank.B @ np.linalg.solve(
            CB, C @ self.filterbank.A)
        for name, val in (("C", C.copy()), ("CB", CB), ("Pi", Pi)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def m(self):
        return self.filterbank.m

    @property
    def n(self):
        return self.filterbank.n

    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.Pi))))


def factor_inner_realization(filterbank, C):
    """Stable realization (Pi, B (CB)^{-1}, I, 0) of G(z) (z C G(z))^{-1}.

    Accepts a FactorParameter or a raw matrix in the stable factor set.
    """
    param = C if isinstance(C, FactorParameter) else FactorParameter(filterbank, C)
    n = filterbank.n
    Bt = np.linalg.solve(param.CB.T, filterbank.B.T).T
    return StateSpaceSystem(param.Pi, Bt, np.eye(n), np.zeros((n, filterbank.m)))


def matrix_to_json(M):
    """Encode a matrix as row-major nested lists.

    Real matrices use plain numbers; complex matrices encode each entry as a
    [re, im] pair.
    """
    M = np.atleast_2d(np.asarray(M))
    if np.iscomplexobj(M):
        return [[[float(v.real), float(v.imag)] for v in row] for row in M]
    return [[float(v) for v in row] for row in M]


def matrix_from_json(data):
    """Decode a matrix produced by :func:`matrix_to_json`."""
    if not isinstance(data, list) or not data or not isinstance(data[0], list):
        raise ValueError("matrix JSON must be a non-empty list of rows")
    first = data[0][0] if data[0] else None
    if isinstance(first, list):
        rows = []
        for row in data:
            rows.append([complex(e[0], e[1]) for e in row])
        return np.array(rows, dtype=complex)
    return np.array(data, dtype=float)
