"""Homotopy continuation in the prior.

The flat-prior problem g(1, C) = Sigma has a closed-form solution (the
maximum-entropy parameter).  For a general prior psi the path of densities
(1 - t) + t psi, t in [0, 1], connects the two problems; differentiating
g(p(t), C(t)) = Sigma in t gives the path ODE

    g'(p(t), C; C') = -( g(psi, C) - g(1, C) ),

which is followed by an Euler predictor and a Newton corrector per step.
Steps are halved on corrector failure (each step retries from the
configured dt, so one hard spot does not shrink the rest of the path) and a
SolverError reports the failure history when the floor is reached.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, MembershipError, SolverError
from .factorization import homotopy_prior
from .matrixeq import reverse_cholesky
from .moment import (apply_g1_direction, make_chart, moment_g_statespace,
                     solve_jacobian_system)
from .statespace import (FactorParameter, coerce_field, is_in_Cplus,
                         matrix_to_json)

__all__ = [
    "HomotopyConfig",
    "PathSample",
    "SolutionPath",
    "maxent_initialization",
    "predictor_step",
    "corrector_newton",
    "run_continuation",
    "write_path_csv",
    "write_path_json",
]

SNAP_TOL = 1e-12
FEASIBILITY_TOL = 1e-8
BACKTRACK_LIMIT = 30


@dataclass(frozen=True)
class HomotopyConfig:
    """Step-size and tolerance settings for the continuation run."""

    dt: float = 0.1
    min_dt: float = 1e-4
    newton_tol: float = 1e-10
    max_newton: int = 20
    grid_n: int = 1024

    def __post_init__(self):
        if not 0.0 < self.dt <= 1.0:
            raise ConfigError(f"dt must lie in (0, 1], got {self.dt}")
        if not 0.0 < self.min_dt <= self.dt:
            raise ConfigError(
                f"min_dt must lie in (0, dt], got {self.min_dt}")
        if not self.newton_tol > 0.0:
            raise ConfigError("newton_tol must be positive")
        if int(self.max_newton) < 1:
            raise ConfigError("max_newton must be at least 1")
        if int(self.grid_n) < 16:
            raise ConfigError("grid_n must be at least 16")


@dataclass(frozen=True)
class PathSample:
    """One accepted continuation step."""

    t: float
    C: np.ndarray
    y: np.ndarray
    residual: float
    newton_iters: int
    gram_cond: float
    tangent_norm: float


@dataclass(frozen=True)
class SolutionPath:
    """Full record of a continuation run."""

    filterbank: object
    config: HomotopyConfig
    Sigma: np.ndarray
    samples: tuple = field(default_factory=tuple)

    @property
    def final(self):
        return self.samples[-1]

    def final_parameter(self):
        return FactorParameter(self.filterbank, self.final.C)


def maxent_initialization(filterbank, Sigma, chart=None,
                          feasibility_tol=FEASIBILITY_TOL):
    """Closed-form solution of g(1, C) = Sigma.

    With B* Sigma^{-1} B = L* L (L lower triangular, positive diagonal), the
    parameter is C = L^{-*} B* Sigma^{-1}.  Sigma must be Hermitian positive
    definite and feasible: its distance from the range of the covariance
    operator must not exceed ``feasibility_tol`` relative to its norm.
    """
    Sigma = np.atleast_2d(np.asarray(Sigma))
    n = filterbank.n
    if Sigma.shape != (n, n):
        raise ValueError(f"Sigma must be {n}x{n}, got {Sigma.shape}")
    defect = float(np.max(np.abs(Sigma - Sigma.conj().T)))
    if defect > 1e-12 * (1.0 + float(np.max(np.abs(Sigma)))):
        raise ValueError(f"Sigma is not Hermitian (defect {defect:.3e})")
    Sigma = 0.5 * (Sigma + Sigma.conj().T)
    eig_min = float(np.min(np.linalg.eigvalsh(Sigma)))
    if not eig_min > 0.0:
        raise MembershipError(
            f"Sigma is not positive definite (min eigenvalue {eig_min:.6e})")
    if chart is None:
        chart = make_chart(filterbank)
    rr = chart.range_residual(Sigma)
    if rr > feasibility_tol:
        raise MembershipError(
            f"Sigma is not attainable as a state covariance: relative "
            f"distance {rr:.3e} from the range of the covariance operator")
    Si = np.linalg.inv(Sigma)
    B = filterbank.B
    L = reverse_cholesky(B.conj().T @ Si @ B)
    C = np.linalg.solve(L.conj().T, B.conj().T @ Si)
    C = coerce_field(C, filterbank.field, what="maximum-entropy parameter")
    param = FactorParameter(filterbank, C)
    gap = float(np.linalg.norm(
        moment_g_statespace(filterbank, None, param) - Sigma))
    if gap > 1e-9 * float(np.linalg.norm(Sigma)):
        raise SolverError(
            f"maximum-entropy parameter failed its defining equation "
            f"(||g(1, C) - Sigma|| = {gap:.3e})")
    return param


def corrector_newton(chart, prior_t, param, Sigma, config):
    """Newton iteration on g(p(t), C) = Sigma from the predicted parameter.

    Steps are damped only to stay inside the factor set (residual growth is
    not a reason to shrink: the verified direction solve already guarantees
    descent to first order).  The residual is the plain Frobenius norm
    ||Sigma - g||, not scaled by ||Sigma||.  Returns (param, residual,
    iterations, gram_cond); raises SolverError when the budget is exhausted
    or a candidate cannot be kept feasible.
    """
    fb = chart.filterbank
    gram_cond = 0.0
    for it in range(int(config.max_newton) + 1):
        gval = moment_g_statespace(fb, prior_t, param)
        resid_mat = Sigma - gval
        rnorm = float(np.linalg.norm(resid_mat))
        if rnorm <= config.newton_tol:
            return param, rnorm, it, gram_cond
        if it == int(config.max_newton):
            break
        V, info = solve_jacobian_system(chart, prior_t, param, resid_mat)
        gram_cond = info.gram_cond
        s = 1.0
        accepted = None
        for _ in range(BACKTRACK_LIMIT + 1):
            cand = param.C + s * V
            if is_in_Cplus(fb, cand):
                accepted = cand
                break
            s *= 0.5
        if accepted is None:
            raise SolverError(
                "Newton step could not be damped into the factor set")
        param = FactorParameter(fb, accepted)
    raise SolverError(
        f"Newton did not reach tolerance {config.newton_tol:.1e} in "
        f"{config.max_newton} iterations (last residual {rnorm:.3e})")


def predictor_step(chart, prior, t, param, dt):
    """Euler predictor for the path at time t.

    The tangent v solves the linearized path equation

        g'(p(t), C; v) = -(g(psi, C) - g(1, C)),

    whose right-hand side is the t-derivative of the moment map along the
    prior family.  Returns (C_pred, v, info) with C_pred = C + dt v and info
    the direction-solve diagnostics.
    """
    fb = chart.filterbank
    prior_t = homotopy_prior(prior, t)
    drift = apply_g1_direction(fb, prior, param)
    v, info = solve_jacobian_system(chart, prior_t, param, -drift)
    return param.C + dt * v, v, info


def run_continuation(filterbank, prior, Sigma, config=None, chart=None,
                     callback=None):
    """Follow the prior homotopy from the maximum-entropy start to t = 1.

    Parameters
    ----------
    filterbank : FilterBank
    prior : PriorSpectrum
    Sigma : (n, n) Hermitian positive definite feasible covariance
    config : HomotopyConfig, defaults to HomotopyConfig()
    chart : CoordinateChart, built (anchored at the start parameter) when
        omitted; fixes the meaning of the coordinate columns in the output
    callback : optional callable, invoked with each accepted PathSample

    Returns
    -------
    SolutionPath
        Samples at t = 0 and at every accepted step up to and including
        t = 1.  With the default dt = 0.1 the path has exactly ten steps.
    """
    config = config or HomotopyConfig()
    if chart is None:
        # the feasibility check needs a chart; anchor the real one at the
        # start parameter once it is known
        param = maxent_initialization(filterbank, Sigma,
                                      chart=make_chart(filterbank))
        chart = make_chart(filterbank, anchor=param.C)
    else:
        param = maxent_initialization(filterbank, Sigma, chart=chart)
    Sigma = 0.5 * (np.atleast_2d(np.asarray(Sigma))
                   + np.atleast_2d(np.asarray(Sigma)).conj().T)

    g0 = moment_g_statespace(filterbank, None, param)
    samples = [PathSample(
        t=0.0, C=param.C, y=chart.factor_coords(param.C),
        residual=float(np.linalg.norm(Sigma - g0)),
        newton_iters=0, gram_cond=0.0, tangent_norm=0.0)]
    if callback is not None:
        callback(samples[0])

    t = 0.0
    history = []
    while t < 1.0:
        dt_try = float(config.dt)
        while True:
            t_next = t + dt_try
            if t_next > 1.0 - SNAP_TOL:
                t_next = 1.0
            dt_eff = t_next - t
            try:
                C_pred, V, info = predictor_step(chart, prior, t, param,
                                                 dt_eff)
                if not is_in_Cplus(filterbank, C_pred):
                    raise SolverError(
                        "predicted parameter left the factor set")
                prior_next = homotopy_prior(prior, t_next)
                pred = FactorParameter(filterbank, C_pred)
                param_next, rnorm, iters, gcond = corrector_newton(
                    chart, prior_next, pred, Sigma, config)
            except (SolverError, MembershipError) as exc:
                history.append((t, dt_try, str(exc)))
                dt_try *= 0.5
                if dt_try < config.min_dt:
                    raise SolverError(
                        f"continuation stalled at t = {t:.6g}: step size fell "
                        f"below min_dt = {config.min_dt:.1e}",
                        history=history) from exc
                continue
            break
        t = t_next
        param = param_next
        sample = PathSample(
            t=t, C=param.C, y=chart.factor_coords(param.C), residual=rnorm,
            newton_iters=iters,
            gram_cond=gcond if iters else info.gram_cond,
            tangent_norm=float(np.linalg.norm(V)))
        samples.append(sample)
        if callback is not None:
            callback(sample)
    return SolutionPath(filterbank=filterbank, config=config, Sigma=Sigma,
                        samples=tuple(samples))


def _fmt(v):
    return f"{float(v):.17g}"


def write_path_csv(path, dest):
    """Write a SolutionPath as CSV: t, y_1..y_M, residual, newton_iters,
    gram_cond; floats carry 17 significant digits."""
    M = path.samples[0].y.size
    header = ["t"] + [f"y_{k}" for k in range(1, M + 1)] \
        + ["residual", "newton_iters", "gram_cond"]
    lines = [",".join(header)]
    for s in path.samples:
        row = [_fmt(s.t)] + [_fmt(v) for v in s.y] \
            + [_fmt(s.residual), str(int(s.newton_iters)), _fmt(s.gram_cond)]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)


def write_path_json(path, dest):
    """JSON sidecar: run metadata plus the factor parameter at every sample."""
    doc = {
        "m": path.filterbank.m,
        "n": path.filterbank.n,
        "field": path.filterbank.field,
        "config": asdict(path.config),
        "Sigma": matrix_to_json(path.Sigma),
        "samples": [
            {
                "t": s.t,
                "C": matrix_to_json(s.C),
                "y": [float(v) for v in s.y],
                "residual": s.residual,
                "newton_iters": int(s.newton_iters),
                "gram_cond": s.gram_cond,
                "tangent_norm": s.tangent_norm,
            }
            for s in path.samples
        ],
    }
    text = json.dumps(doc, indent=2)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)
