"""Parametric spectral estimation from state covariances.

A bank of stable filters G(z) = (zI - A)^{-1} B driven by a wide-sense
stationary process ties the input power spectrum Phi to the state covariance
Sigma through Sigma = integral of G Phi G* on the unit circle.  This package
estimates Phi within the family psi / (Gamma* Gamma), where psi is a scalar
prior density and Gamma = C G is an outer factor, by following a homotopy in
the prior from the closed-form flat-prior solution to the requested one.

Layering, bottom up:

- ``statespace``: filter banks, priors, membership tests for the admissible
  parameter sets, grid evaluation.
- ``matrixeq``: Stein/Lyapunov and Riccati solvers (doubling plus Newton
  polish) and triangular factorizations.
- ``factorization``: spectral factorization maps between covariance-side and
  factor-side parameters, outer factors for scalar and additive data.
- ``moment``: the two moment maps and their derivatives, by state-space
  formulas and by quadrature, coordinate charts, Jacobians.
- ``continuation``: maximum-entropy start, predictor/corrector path
  following, CSV/JSON serialization.
- ``cli``: ``spectral-homotopy`` command-line entry points.
"""

from .errors import (ConfigError, EvaluationError, FactorizationError,
                     MembershipError, SolverError, SpectralHomotopyError)
from .statespace import (CplusDiagnostics, FactorParameter, FilterBank,
                         LplusDiagnostics, PriorSpectrum, StateSpaceSystem,
                         cascade, circle_grid, coerce_field, constant_prior,
                         factor_inner_realization, grid_size_from_spacing,
                         is_in_Cplus, is_in_Lplus,
                         make_covariance_extension_filter, matrix_from_json,
                         matrix_to_json, prior_from_outer,
                         prior_from_polynomial, series_product)
from .matrixeq import (DareSolution, reverse_cholesky, solve_dare_appendix,
                       solve_dare_lambda, solve_dlyap, standard_cholesky)
from .factorization import (OuterFactor, density_values, h_inverse, h_map,
                            homotopy_prior, left_outer_factor_from_additive,
                            right_outer_factor, scalar_outer_factor)
from .moment import (CoordinateChart, JacobianSolveInfo,
                     apply_f2_quadrature, apply_g1_direction,
                     apply_g2_quadrature, apply_g2_statespace,
                     assemble_jacobian_matrix, build_factor_basis,
                     build_range_gamma_basis, jacobian_condition_number,
                     make_chart, moment_f_quadrature, moment_g_quadrature,
                     moment_g_statespace, solve_jacobian_system, trace_inner)
from .continuation import (HomotopyConfig, PathSample, SolutionPath,
                           corrector_newton, maxent_initialization,
                           predictor_step, run_continuation, write_path_csv,
                           write_path_json)

__version__ = "0.1.0"

__all__ = [
    "SpectralHomotopyError", "EvaluationError", "MembershipError",
    "FactorizationError", "SolverError", "ConfigError",
    "StateSpaceSystem", "FilterBank", "PriorSpectrum", "FactorParameter",
    "CplusDiagnostics", "LplusDiagnostics",
    "make_covariance_extension_filter", "constant_prior",
    "prior_from_polynomial", "prior_from_outer", "is_in_Cplus", "is_in_Lplus",
    "factor_inner_realization", "circle_grid", "grid_size_from_spacing",
    "cascade", "series_product", "coerce_field", "matrix_to_json",
    "matrix_from_json",
    "DareSolution", "solve_dlyap", "solve_dare_appendix", "solve_dare_lambda",
    "standard_cholesky", "reverse_cholesky",
    "OuterFactor", "right_outer_factor", "left_outer_factor_from_additive",
    "h_map", "h_inverse", "scalar_outer_factor", "homotopy_prior",
    "density_values",
    "trace_inner", "moment_f_quadrature", "moment_g_quadrature",
    "moment_g_statespace", "apply_f2_quadrature", "apply_g2_quadrature",
    "apply_g2_statespace", "apply_g1_direction", "build_range_gamma_basis",
    "build_factor_basis", "CoordinateChart", "make_chart",
    "assemble_jacobian_matrix", "jacobian_condition_number",
    "JacobianSolveInfo", "solve_jacobian_system",
    "HomotopyConfig", "PathSample", "SolutionPath", "maxent_initialization",
    "predictor_step", "corrector_newton", "run_continuation",
    "write_path_csv", "write_path_json",
    "__version__",
]
