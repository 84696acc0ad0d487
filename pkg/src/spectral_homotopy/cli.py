"""Command-line interface.

Verbs:

- ``solve``: follow the prior homotopy and write the path artifacts (CSV,
  JSON sidecar, final parameters, run report).
- ``condnum``: condition numbers of the two parametrizations at a given C,
  by quadrature at the configured grid spacing.
- ``check``: membership and feasibility report for the config inputs;
  report-only, exits 0 whenever the config itself parses.
- ``maxent``: closed-form flat-prior solution for Sigma.
- ``selftest``: reduced-size consistency suites.

Exit codes: 0 success, 1 selftest failure, 2 configuration error, 3 solver
failure.  The env var SPECTRAL_HOMOTOPY_THREADS caps worker threads used by
Jacobian assembly.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from .continuation import (HomotopyConfig, maxent_initialization,
                           run_continuation, write_path_csv, write_path_json)
from .errors import (ConfigError, EvaluationError, FactorizationError,
                     MembershipError, SolverError)
from .factorization import h_inverse
from .moment import (DEFAULT_GRID_N, apply_g2_statespace,
                     jacobian_condition_number, make_chart,
                     moment_g_quadrature, moment_g_statespace)
from .statespace import (FactorParameter, FilterBank, StateSpaceSystem,
                         constant_prior, grid_size_from_spacing, is_in_Cplus,
                         is_in_Lplus, make_covariance_extension_filter,
                         matrix_from_json, matrix_to_json, prior_from_outer,
                         prior_from_polynomial)

__all__ = ["RunConfig", "parse_config", "serialize_config", "main"]


# ---------------------------------------------------------------------------
# config parsing


def _as_section(doc, path, allowed):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object, got {type(doc).__name__}")
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key (allowed: "
                              + ", ".join(sorted(allowed)) + ")")
    return doc


def _require(doc, key, path):
    if key not in doc:
        raise ConfigError(f"{path}.{key}: required key is missing")
    return doc[key]


def _parse_matrix(data, path):
    try:
        return matrix_from_json(data)
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_number(value, path, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return kind(value)


def _parse_scalar_list(data, path):
    """List of plain numbers or [re, im] pairs -> 1-d array."""
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{path}: expected a non-empty list")
    if isinstance(data[0], list):
        try:
            return np.array([complex(e[0], e[1]) for e in data])
        except (TypeError, IndexError) as exc:
            raise ConfigError(f"{path}: bad [re, im] entry ({exc})") from exc
    try:
        return np.array([float(v) for v in data])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad number entry ({exc})") from exc


def _parse_filter(spec, path="filter"):
    spec = _as_section(spec, path, {"preset", "m", "p", "A", "B", "field"})
    if "preset" in spec:
        preset = spec["preset"]
        if preset != "covext":
            raise ConfigError(f"{path}.preset: unknown preset {preset!r} "
                              "(available: covext)")
        m = _parse_number(_require(spec, "m", path), f"{path}.m", int)
        p = _parse_number(_require(spec, "p", path), f"{path}.p", int)
        field = spec.get("field", "real")
        try:
            fb = make_covariance_extension_filter(m, p, field=field)
        except (ValueError, MembershipError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return fb, {"preset": "covext", "m": m, "p": p}
    A = _parse_matrix(_require(spec, "A", path), f"{path}.A")
    B = _parse_matrix(_require(spec, "B", path), f"{path}.B")
    field = spec.get("field",
                     "complex" if (np.iscomplexobj(A) or np.iscomplexobj(B))
                     else "real")
    try:
        fb = FilterBank(A, B, field=field)
    except (ValueError, MembershipError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return fb, dict(spec)


def _parse_prior(spec, path="prior"):
    spec = _as_section(spec, path, {"kind", "value", "b", "sigma"})
    kind = _require(spec, "kind", path)
    try:
        if kind == "constant":
            value = _parse_number(_require(spec, "value", path),
                                  f"{path}.value")
            return constant_prior(value)
        if kind == "polynomial":
            b = _parse_scalar_list(_require(spec, "b", path), f"{path}.b")
            return prior_from_polynomial(b)
        if kind == "rational":
            sub = _as_section(_require(spec, "sigma", path), f"{path}.sigma",
                              {"A", "B", "C", "D"})
            sys_ = StateSpaceSystem(
                _parse_matrix(_require(sub, "A", f"{path}.sigma"),
                              f"{path}.sigma.A"),
                _parse_matrix(_require(sub, "B", f"{path}.sigma"),
                              f"{path}.sigma.B"),
                _parse_matrix(_require(sub, "C", f"{path}.sigma"),
                              f"{path}.sigma.C"),
                _parse_matrix(_require(sub, "D", f"{path}.sigma"),
                              f"{path}.sigma.D"))
            return prior_from_outer(sys_)
    except MembershipError:
        raise
    except (ValueError, ConfigError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: unknown kind {kind!r} "
                      "(constant | polynomial | rational)")


@dataclasses.dataclass
class RunConfig:
    """Parsed configuration; fields are None when the section was absent.

    The validated section documents are kept verbatim (``*_spec``) so that
    serialization reproduces the input exactly: regenerating floats from
    typed state would lose values that pass through non-invertible maps
    (a constant prior is stored by its square root, for instance).
    """

    filterbank: FilterBank
    filter_spec: dict
    prior: object = None
    prior_spec: dict = None
    sigma: np.ndarray = None
    sigma_from: tuple = None   # (prior-or-None, C) when sigma came from a pair
    sigma_spec: dict = None
    C: np.ndarray = None
    Lambda: np.ndarray = None
    continuation: HomotopyConfig = dataclasses.field(
        default_factory=HomotopyConfig)
    continuation_keys: tuple = ()
    dtheta: float = None
    grid_n: int = None
    quadrature_keys: tuple = ()
    out_dir: str = None
    formats: tuple = ("csv", "json")
    output_keys: tuple = ()
    prior_error: str = None    # lenient mode: message instead of an exception


TOP_KEYS = {"filter", "prior", "sigma", "C", "Lambda", "continuation",
            "quadrature", "output"}


def parse_config(doc, lenient_prior=False):
    """Validate a config document into a RunConfig.

    Error messages carry the JSON path of the offending field.  With
    ``lenient_prior`` a prior that parses structurally but violates a domain
    constraint (e.g. a non-minimum-phase polynomial) is recorded as
    ``prior_error`` instead of raising, so ``check`` can report it.
    """
    doc = _as_section(doc, "config", TOP_KEYS)
    fb, fspec = _parse_filter(_require(doc, "filter", "config"))
    cfg = RunConfig(filterbank=fb, filter_spec=fspec)

    if "prior" in doc:
        cfg.prior_spec = doc["prior"]
        try:
            cfg.prior = _parse_prior(doc["prior"])
        except MembershipError as exc:
            if not lenient_prior:
                raise ConfigError(f"prior: {exc}") from exc
            cfg.prior_error = str(exc)

    if "sigma" in doc:
        spec = _as_section(doc["sigma"], "sigma", {"matrix", "from"})
        cfg.sigma_spec = spec
        if "matrix" in spec:
            cfg.sigma = _parse_matrix(spec["matrix"], "sigma.matrix")
        elif "from" in spec:
            sub = _as_section(spec["from"], "sigma.from", {"prior", "C"})
            gen_prior = (_parse_prior(sub["prior"], "sigma.from.prior")
                         if "prior" in sub else None)
            genC = _parse_matrix(_require(sub, "C", "sigma.from"),
                                 "sigma.from.C")
            cfg.sigma_from = (gen_prior, genC)
        else:
            raise ConfigError("sigma: needs either 'matrix' or 'from'")

    if "C" in doc:
        cfg.C = _parse_matrix(doc["C"], "C")
    if "Lambda" in doc:
        cfg.Lambda = _parse_matrix(doc["Lambda"], "Lambda")

    if "continuation" in doc:
        spec = _as_section(doc["continuation"], "continuation",
                           {"dt", "min_dt", "newton_tol", "max_newton",
                            "grid_n"})
        kwargs = {}
        for key in spec:
            kind = int if key in ("max_newton", "grid_n") else float
            kwargs[key] = _parse_number(spec[key], f"continuation.{key}", kind)
        try:
            cfg.continuation = HomotopyConfig(**kwargs)
        except ConfigError as exc:
            raise ConfigError(f"continuation: {exc}") from exc
        cfg.continuation_keys = tuple(spec)

    if "quadrature" in doc:
        spec = _as_section(doc["quadrature"], "quadrature",
                           {"dtheta", "grid_n"})
        if "dtheta" in spec:
            cfg.dtheta = _parse_number(spec["dtheta"], "quadrature.dtheta")
            if not cfg.dtheta > 0.0:
                raise ConfigError("quadrature.dtheta: must be positive")
        if "grid_n" in spec:
            cfg.grid_n = _parse_number(spec["grid_n"], "quadrature.grid_n",
                                       int)
            if cfg.grid_n < 16:
                raise ConfigError("quadrature.grid_n: must be at least 16")
        cfg.quadrature_keys = tuple(spec)

    if "output" in doc:
        spec = _as_section(doc["output"], "output", {"directory", "formats"})
        if "directory" in spec:
            if not isinstance(spec["directory"], str):
                raise ConfigError("output.directory: expected a string")
            cfg.out_dir = spec["directory"]
        if "formats" in spec:
            fmts = spec["formats"]
            if (not isinstance(fmts, list)
                    or any(f not in ("csv", "json") for f in fmts)):
                raise ConfigError(
                    "output.formats: expected a list drawn from [csv, json]")
            cfg.formats = tuple(fmts)
        cfg.output_keys = tuple(spec)

    return cfg


def serialize_config(cfg):
    """Rebuild the config document (sections that were present, any order)."""
    doc = {"filter": dict(cfg.filter_spec)}
    if cfg.prior_spec is not None:
        doc["prior"] = cfg.prior_spec
    if cfg.sigma_spec is not None:
        doc["sigma"] = cfg.sigma_spec
    if cfg.C is not None:
        doc["C"] = matrix_to_json(cfg.C)
    if cfg.Lambda is not None:
        doc["Lambda"] = matrix_to_json(cfg.Lambda)
    if cfg.continuation_keys:
        values = dataclasses.asdict(cfg.continuation)
        doc["continuation"] = {k: values[k] for k in cfg.continuation_keys}
    if cfg.quadrature_keys:
        quad = {"dtheta": cfg.dtheta, "grid_n": cfg.grid_n}
        doc["quadrature"] = {k: quad[k] for k in cfg.quadrature_keys}
    if cfg.output_keys:
        out = {"directory": cfg.out_dir, "formats": list(cfg.formats)}
        doc["output"] = {k: out[k] for k in cfg.output_keys}
    return doc


def _load_config(args, lenient_prior=False):
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {args.config!r} is not valid JSON: {exc}")
    cfg = parse_config(doc, lenient_prior=lenient_prior)
    if args.out is not None:
        cfg.out_dir = args.out
    if getattr(args, "dt", None) is not None:
        cfg.continuation = dataclasses.replace(cfg.continuation, dt=args.dt)
    if getattr(args, "tol", None) is not None:
        cfg.continuation = dataclasses.replace(cfg.continuation,
                                               newton_tol=args.tol)
    if getattr(args, "dtheta", None) is not None:
        cfg.dtheta = args.dtheta
    return cfg


def _resolve_sigma(cfg):
    if cfg.sigma is not None:
        return cfg.sigma
    if cfg.sigma_from is not None:
        gen_prior, genC = cfg.sigma_from
        prior = gen_prior if gen_prior is not None else cfg.prior
        param = FactorParameter(cfg.filterbank, genC)
        return moment_g_statespace(cfg.filterbank, prior, param)
    raise ConfigError("sigma: section is required for this command")


def _quad_grid_n(cfg, default=None):
    if cfg.dtheta is not None:
        return grid_size_from_spacing(cfg.dtheta)
    if cfg.grid_n is not None:
        return cfg.grid_n
    return default if default is not None else DEFAULT_GRID_N


def _ensure_outdir(cfg):
    out = cfg.out_dir or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# verbs


def cmd_solve(args):
    cfg = _load_config(args)
    if cfg.prior is None:
        raise ConfigError("prior: section is required for solve")
    t0 = time.perf_counter()
    Sigma = _resolve_sigma(cfg)
    fb = cfg.filterbank
    path = run_continuation(fb, cfg.prior, Sigma, config=cfg.continuation)
    t_solve = time.perf_counter() - t0

    final = path.final_parameter()
    chart = make_chart(fb)
    Lam = h_inverse(chart, final)
    gfin = moment_g_statespace(fb, cfg.prior, final)
    resid = float(np.linalg.norm(gfin - Sigma))

    t1 = time.perf_counter()
    N = _quad_grid_n(cfg)
    cond_g = jacobian_condition_number(chart, cfg.prior, final, which="g",
                                       route="quadrature", grid_n=N)
    cond_f = jacobian_condition_number(chart, cfg.prior, Lam, which="f",
                                       route="quadrature", grid_n=N)
    t_cond = time.perf_counter() - t1

    out = _ensure_outdir(cfg)
    written = []
    if "csv" in cfg.formats:
        dest = os.path.join(out, "path.csv")
        write_path_csv(path, dest)
        written.append(dest)
    if "json" in cfg.formats:
        dest = os.path.join(out, "path.json")
        write_path_json(path, dest)
        written.append(dest)
    cdest = os.path.join(out, "final_C.json")
    _write_json(cdest, {"m": fb.m, "n": fb.n, "field": fb.field,
                        "C": matrix_to_json(final.C)})
    written.append(cdest)
    ldest = os.path.join(out, "final_Lambda.json")
    _write_json(ldest, {"n": fb.n, "field": fb.field,
                        "Lambda": matrix_to_json(Lam)})
    written.append(ldest)
    report = {
        "steps": len(path.samples) - 1,
        "final_t": path.final.t,
        "final_residual": resid,
        "max_sample_residual": max(s.residual for s in path.samples),
        "newton_iters_total": int(sum(s.newton_iters for s in path.samples)),
        "cond_g": cond_g,
        "cond_f": cond_f,
        "cond_ratio": cond_f / cond_g,
        "quadrature_grid_n": N,
        "timings_s": {"continuation": t_solve, "condition_numbers": t_cond,
                      "total": time.perf_counter() - t0},
    }
    rdest = os.path.join(out, "report.json")
    _write_json(rdest, report)
    written.append(rdest)

    print(f"solve: {report['steps']} steps, final residual {resid:.3e}, "
          f"cond_g {cond_g:.4e}, cond_f {cond_f:.4e}")
    for dest in written:
        print(f"wrote {dest}")
    return 0


def cmd_condnum(args):
    cfg = _load_config(args)
    if cfg.prior is None:
        raise ConfigError("prior: section is required for condnum")
    if cfg.C is None:
        raise ConfigError("C: section is required for condnum")
    fb = cfg.filterbank
    param = FactorParameter(fb, cfg.C)
    chart = make_chart(fb)
    N = _quad_grid_n(cfg, default=grid_size_from_spacing(1e-4))
    t0 = time.perf_counter()
    cond_g = jacobian_condition_number(chart, cfg.prior, param, which="g",
                                       route="quadrature", grid_n=N)
    Lam = h_inverse(chart, param)
    cond_f = jacobian_condition_number(chart, cfg.prior, Lam, which="f",
                                       route="quadrature", grid_n=N)
    elapsed = time.perf_counter() - t0
    print(f"cond_g = {cond_g:.6e}")
    print(f"cond_f = {cond_f:.6e}")
    print(f"ratio  = {cond_f / cond_g:.6e}")
    if cfg.out_dir is not None:
        out = _ensure_outdir(cfg)
        dest = os.path.join(out, "condnum.json")
        _write_json(dest, {"cond_g": cond_g, "cond_f": cond_f,
                           "ratio": cond_f / cond_g,
                           "quadrature_grid_n": N, "time_s": elapsed})
        print(f"wrote {dest}")
    return 0


def cmd_check(args):
    cfg = _load_config(args, lenient_prior=True)
    fb = cfg.filterbank
    chart = make_chart(fb)
    rho = float(np.max(np.abs(np.linalg.eigvals(fb.A)))) if fb.n else 0.0
    print(f"filter: n={fb.n} m={fb.m} field={fb.field} "
          f"spectral radius {rho:.6g}")

    if cfg.prior_error is not None:
        print(f"prior: VIOLATION {cfg.prior_error}")
    elif cfg.prior is not None:
        print(f"prior: ok ({cfg.prior.kind}, minimum phase)")

    if cfg.C is not None:
        diag = is_in_Cplus(fb, cfg.C)
        if diag:
            print(f"C: in-set (closed-loop spectral radius "
                  f"{diag.spectral_radius:.6g})")
        else:
            print(f"C: VIOLATION {'; '.join(diag.failures)} "
                  f"(closed-loop spectral radius {diag.spectral_radius:.6g})")

    if cfg.Lambda is not None:
        diag = is_in_Lplus(fb, cfg.Lambda)
        state = "positive on the circle" if diag else "VIOLATION not positive"
        print(f"Lambda: {state} (min grid eigenvalue "
              f"{diag.min_eigenvalue:.6g})")

    if cfg.sigma is not None or cfg.sigma_from is not None:
        try:
            Sigma = _resolve_sigma(cfg)
        except (MembershipError, ValueError) as exc:
            print(f"sigma: VIOLATION {exc}")
            return 0
        Sigma = np.atleast_2d(np.asarray(Sigma))
        herm = float(np.max(np.abs(Sigma - Sigma.conj().T)))
        eig_min = float(np.min(np.linalg.eigvalsh(
            0.5 * (Sigma + Sigma.conj().T))))
        rr = chart.range_residual(0.5 * (Sigma + Sigma.conj().T))
        problems = []
        if herm > 1e-12 * (1.0 + float(np.max(np.abs(Sigma)))):
            problems.append(f"not Hermitian (defect {herm:.3e})")
        if not eig_min > 0.0:
            problems.append(f"not positive definite (min eig {eig_min:.3e})")
        if rr > 1e-8:
            problems.append(f"not attainable (range residual {rr:.3e})")
        if problems:
            print("sigma: VIOLATION " + "; ".join(problems))
        else:
            print(f"sigma: feasible (min eigenvalue {eig_min:.6g}, "
                  f"range residual {rr:.3e})")
    return 0


def cmd_maxent(args):
    cfg = _load_config(args)
    fb = cfg.filterbank
    Sigma = _resolve_sigma(cfg)
    param = maxent_initialization(fb, Sigma)
    gap = float(np.linalg.norm(moment_g_statespace(fb, None, param) - Sigma))
    rel = gap / float(np.linalg.norm(Sigma))
    print(f"maxent: defining residual {gap:.3e} ({rel:.3e} relative)")
    if cfg.out_dir is not None:
        out = _ensure_outdir(cfg)
        dest = os.path.join(out, "maxent_C.json")
        _write_json(dest, {"m": fb.m, "n": fb.n, "field": fb.field,
                           "C": matrix_to_json(param.C),
                           "residual": gap})
        print(f"wrote {dest}")
    return 0


# ---------------------------------------------------------------------------
# selftest

PERTURB_ENV = "SPECTRAL_HOMOTOPY_PERTURB_H"


def _selftest_setup():
    fb = make_covariance_extension_filter(2, 1)
    chart = make_chart(fb)
    rng = np.random.default_rng(20240817)

    def random_sigma():
        X = rng.standard_normal((fb.n, fb.n))
        Xp = chart.project_range_gamma(0.5 * (X + X.T))
        lam = float(np.min(np.linalg.eigvalsh(Xp)))
        return Xp + (abs(lam) + 0.5 + rng.random()) * np.eye(fb.n)

    return fb, chart, rng, random_sigma


def _suite_oracle(fb, chart, rng, random_sigma):
    worst = 0.0
    prior = prior_from_polynomial([1.0, -1.0, 0.89])
    for _ in range(5):
        param = maxent_initialization(fb, random_sigma())
        gs = moment_g_statespace(fb, prior, param)
        gq = moment_g_quadrature(fb, prior, param, grid_n=2048)
        worst = max(worst, float(np.linalg.norm(gs - gq)
                                 / np.linalg.norm(gs)))
    return worst, 1e-7


def _suite_roundtrip(fb, chart, rng, random_sigma):
    from .factorization import h_map
    # test hook: a documented perturbation knob so the failure path of this
    # suite is itself testable
    eps = float(os.environ.get(PERTURB_ENV, "0") or 0.0)
    worst = 0.0
    for _ in range(5):
        p0 = maxent_initialization(fb, random_sigma())
        Lam = h_inverse(chart, p0)
        p1 = h_map(fb, Lam)
        C1 = p1.C + eps * np.ones_like(p1.C)
        worst = max(worst, float(np.linalg.norm(C1 - p0.C)
                                 / np.linalg.norm(p0.C)))
    return worst, 1e-8


def _suite_fd(fb, chart, rng, random_sigma):
    prior = prior_from_polynomial([1.0, -1.0, 0.89])
    param = maxent_initialization(fb, random_sigma())
    h = 1e-6
    worst = 0.0
    for _ in range(3):
        V = chart.factor_from_coords(rng.standard_normal(chart.dim))
        d = apply_g2_statespace(fb, prior, param, V)
        gp = moment_g_statespace(
            fb, prior, FactorParameter(fb, param.C + h * V))
        gm = moment_g_statespace(
            fb, prior, FactorParameter(fb, param.C - h * V))
        fd = (gp - gm) / (2.0 * h)
        worst = max(worst, float(np.linalg.norm(d - fd)
                                 / np.linalg.norm(d)))
    return worst, 1e-5


def cmd_selftest(args):
    suites = [("oracle-equivalence", _suite_oracle),
              ("round-trip", _suite_roundtrip),
              ("finite-difference", _suite_fd)]
    setup = _selftest_setup()
    ok = True
    t0 = time.perf_counter()
    for name, suite in suites:
        try:
            worst, tol = suite(*setup)
        except Exception as exc:   # a crash is a failure, keep going
            print(f"{name}: FAIL ({type(exc).__name__}: {exc})")
            ok = False
            continue
        status = "PASS" if worst <= tol else "FAIL"
        ok = ok and worst <= tol
        print(f"{name}: {status} (worst {worst:.3e}, tol {tol:.0e})")
    print(f"selftest: {'PASS' if ok else 'FAIL'} "
          f"({time.perf_counter() - t0:.1f} s)")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# entry point


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spectral-homotopy",
        description="Parametric spectral estimation from state covariances")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add(name, func, helptext, needs_config=True):
        p = sub.add_parser(name, help=helptext)
        if needs_config:
            p.add_argument("--config", required=True,
                           help="path to a JSON config file")
        p.add_argument("--out", default=None,
                       help="output directory (overrides output.directory)")
        p.add_argument("--dt", type=float, default=None,
                       help="continuation step override")
        p.add_argument("--dtheta", type=float, default=None,
                       help="quadrature spacing override")
        p.add_argument("--tol", type=float, default=None,
                       help="Newton tolerance override")
        p.set_defaults(func=func)
        return p

    add("solve", cmd_solve, "follow the prior homotopy, write artifacts")
    add("condnum", cmd_condnum, "condition numbers at a given parameter")
    add("check", cmd_check, "membership and feasibility report")
    add("maxent", cmd_maxent, "closed-form flat-prior solution")
    add("selftest", cmd_selftest, "reduced-size consistency suites",
        needs_config=False)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, MembershipError, FactorizationError,
            EvaluationError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
