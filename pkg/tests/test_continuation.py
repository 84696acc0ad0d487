"""Homotopy continuation: start, predictor, corrector, path, writers."""

import io
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spectral_homotopy import (ConfigError, FactorParameter, HomotopyConfig,
                               MembershipError, SolverError,
                               constant_prior, corrector_newton,
                               homotopy_prior, maxent_initialization,
                               moment_g_statespace, predictor_step,
                               run_continuation, write_path_csv,
                               write_path_json)

from conftest import relative_error


class TestMaxent:
    def test_identity_covariance(self, fb):
        param = maxent_initialization(fb, np.eye(4))
        assert_allclose(param.C, fb.B.T, atol=1e-12)

    def test_defining_equation(self, fb, random_sigma, rng):
        for _ in range(5):
            Sigma = random_sigma(rng)
            param = maxent_initialization(fb, Sigma)
            got = moment_g_statespace(fb, None, param)
            assert relative_error(got, Sigma) < 1e-9

    def test_rejects_indefinite(self, fb):
        with pytest.raises(MembershipError, match="positive definite"):
            maxent_initialization(fb, np.diag([1.0, 1.0, 1.0, -0.1]))

    def test_rejects_unattainable(self, fb):
        # unequal diagonal blocks cannot be a covariance of the lag window
        with pytest.raises(MembershipError, match="attainable"):
            maxent_initialization(fb, np.diag([1.0, 1.0, 2.0, 1.0]))

    def test_rejects_non_hermitian(self, fb):
        M = np.eye(4)
        M[0, 1] = 0.5
        with pytest.raises((MembershipError, ValueError)):
            maxent_initialization(fb, M)


class TestPredictorCorrector:
    def test_corrector_accepts_exact_solution(self, fb, chart, prior_ref,
                                              sigma_ref, param_ref):
        cfg = HomotopyConfig(newton_tol=1e-10)
        prior_t = homotopy_prior(prior_ref, 1.0)
        param, rnorm, iters, _ = corrector_newton(chart, prior_t, param_ref,
                                                  sigma_ref, cfg)
        assert iters == 0
        assert rnorm <= 1e-10
        assert_array_equal(param.C, param_ref.C)

    def test_corrector_recovers_from_perturbation(self, fb, chart, prior_ref,
                                                  sigma_ref, param_ref, rng):
        bump = chart.factor_from_coords(1e-3 * rng.standard_normal(chart.dim))
        start = FactorParameter(fb, param_ref.C + bump)
        cfg = HomotopyConfig(newton_tol=1e-10, max_newton=20)
        prior_t = homotopy_prior(prior_ref, 1.0)
        param, rnorm, iters, _ = corrector_newton(chart, prior_t, start,
                                                  sigma_ref, cfg)
        assert rnorm <= 1e-10
        assert 1 <= iters <= 6
        assert relative_error(param.C, param_ref.C) < 1e-7

    def test_corrector_budget_exhaustion(self, fb, chart, prior_ref,
                                         sigma_ref, param_ref, rng):
        bump = chart.factor_from_coords(1e-3 * rng.standard_normal(chart.dim))
        start = FactorParameter(fb, param_ref.C + bump)
        cfg = HomotopyConfig(newton_tol=1e-15, max_newton=1)
        prior_t = homotopy_prior(prior_ref, 1.0)
        with pytest.raises(SolverError):
            corrector_newton(chart, prior_t, start, sigma_ref, cfg)

    def test_predictor_moves_toward_prior(self, fb, chart, prior_ref,
                                          sigma_ref):
        # one Euler step from t = 0 must reduce the t = 1 residual
        start = maxent_initialization(fb, sigma_ref)
        C_pred, v, info = predictor_step(chart, prior_ref, 0.0, start, 0.1)
        assert_allclose(C_pred, start.C + 0.1 * v, atol=0)
        assert info.verify_residual <= 1e-8
        r0 = np.linalg.norm(
            moment_g_statespace(fb, prior_ref, start) - sigma_ref)
        r1 = np.linalg.norm(
            moment_g_statespace(fb, prior_ref, FactorParameter(fb, C_pred))
            - sigma_ref)
        assert r1 < r0

    def test_predictor_is_stationary_for_flat_prior(self, fb, chart,
                                                    sigma_ref):
        start = maxent_initialization(fb, sigma_ref)
        C_pred, v, _ = predictor_step(chart, constant_prior(1.0), 0.0,
                                      start, 0.1)
        assert np.linalg.norm(v) < 1e-10
        assert_allclose(C_pred, start.C, atol=1e-11)


class TestRunContinuation:
    def test_reference_problem_step_count_and_recovery(self, fb, prior_ref,
                                                       sigma_ref, c_ref):
        cfg = HomotopyConfig(dt=0.1, newton_tol=1e-10)
        path = run_continuation(fb, prior_ref, sigma_ref, config=cfg)
        assert len(path.samples) == 11
        assert path.final.t == 1.0
        assert np.linalg.norm(path.final.C - c_ref) < 1e-6
        gfin = moment_g_statespace(fb, prior_ref, path.final_parameter())
        assert np.linalg.norm(gfin - sigma_ref) <= 1e-10

    def test_times_are_uniform_with_snap(self, fb, prior_ref, sigma_ref):
        path = run_continuation(fb, prior_ref, sigma_ref,
                                config=HomotopyConfig(dt=0.5))
        assert_allclose([s.t for s in path.samples], [0.0, 0.5, 1.0],
                        atol=1e-15)

    def test_flat_prior_path_is_constant(self, fb, sigma_ref):
        path = run_continuation(fb, constant_prior(1.0), sigma_ref)
        y0 = path.samples[0].y
        for s in path.samples[1:]:
            assert np.max(np.abs(s.y - y0)) <= 1e-10

    def test_endpoint_independent_of_step_size(self, fb, prior_ref,
                                               sigma_ref):
        ends = []
        for dt in (0.5, 0.2):
            path = run_continuation(fb, prior_ref, sigma_ref,
                                    config=HomotopyConfig(dt=dt))
            ends.append(path.final.C)
        assert np.linalg.norm(ends[0] - ends[1]) < 1e-6

    def test_callback_sees_every_sample(self, fb, prior_ref, sigma_ref):
        seen = []
        path = run_continuation(fb, prior_ref, sigma_ref,
                                config=HomotopyConfig(dt=0.5),
                                callback=seen.append)
        assert len(seen) == len(path.samples)
        assert seen[0].t == 0.0 and seen[-1].t == 1.0

    def test_infeasible_covariance_raises(self, fb, prior_ref):
        with pytest.raises(MembershipError, match="attainable"):
            run_continuation(fb, prior_ref, np.diag([1.0, 1.0, 2.0, 1.0]))

    def test_impossible_tolerance_reports_history(self, fb, prior_ref,
                                                  sigma_ref):
        cfg = HomotopyConfig(dt=0.5, min_dt=0.4, newton_tol=1e-16,
                             max_newton=2)
        with pytest.raises(SolverError) as exc:
            run_continuation(fb, prior_ref, sigma_ref, config=cfg)
        assert exc.value.history

    def test_first_sample_is_maxent(self, fb, prior_ref, sigma_ref):
        path = run_continuation(fb, prior_ref, sigma_ref,
                                config=HomotopyConfig(dt=0.5))
        start = maxent_initialization(fb, sigma_ref)
        assert_allclose(path.samples[0].C, start.C, atol=1e-14)
        assert path.samples[0].newton_iters == 0


class TestConfig:
    def test_defaults(self):
        cfg = HomotopyConfig()
        assert cfg.dt == 0.1
        assert cfg.newton_tol == 1e-10

    def test_validation(self):
        with pytest.raises(ConfigError):
            HomotopyConfig(dt=0.0)
        with pytest.raises(ConfigError):
            HomotopyConfig(dt=0.1, min_dt=0.2)
        with pytest.raises(ConfigError):
            HomotopyConfig(newton_tol=-1.0)
        with pytest.raises(ConfigError):
            HomotopyConfig(max_newton=0)


class TestWriters:
    @pytest.fixture
    def path(self, fb, prior_ref, sigma_ref):
        return run_continuation(fb, prior_ref, sigma_ref,
                                config=HomotopyConfig(dt=0.5))

    def test_csv_shape_and_header(self, path):
        buf = io.StringIO()
        write_path_csv(path, buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == ("t,y_1,y_2,y_3,y_4,y_5,y_6,y_7,"
                            "residual,newton_iters,gram_cond")
        assert len(lines) == 1 + len(path.samples)
        cells = lines[1].split(",")
        assert len(cells) == 11

    def test_csv_preserves_full_precision(self, path):
        buf = io.StringIO()
        write_path_csv(path, buf)
        rows = buf.getvalue().strip().split("\n")[1:]
        for row, s in zip(rows, path.samples):
            cells = row.split(",")
            assert float(cells[0]) == s.t
            got = np.array([float(v) for v in cells[1:8]])
            assert_array_equal(got, s.y)

    def test_csv_is_deterministic(self, fb, prior_ref, sigma_ref):
        outs = []
        for _ in range(2):
            p = run_continuation(fb, prior_ref, sigma_ref,
                                 config=HomotopyConfig(dt=0.5))
            buf = io.StringIO()
            write_path_csv(p, buf)
            outs.append(buf.getvalue())
        assert outs[0] == outs[1]

    def test_json_document(self, path, fb):
        buf = io.StringIO()
        write_path_json(path, buf)
        doc = json.loads(buf.getvalue())
        assert doc["m"] == fb.m and doc["n"] == fb.n
        assert doc["field"] == "real"
        assert doc["config"]["dt"] == 0.5
        assert len(doc["samples"]) == len(path.samples)
        first = doc["samples"][0]
        for key in ("t", "C", "y", "residual", "newton_iters", "gram_cond",
                    "tangent_norm"):
            assert key in first
        assert doc["samples"][-1]["t"] == 1.0
