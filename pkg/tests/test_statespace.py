"""Filter bank geometry, membership tests, priors, serialization."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral_homotopy import (EvaluationError, FactorParameter, FilterBank,
                               MembershipError, StateSpaceSystem, cascade,
                               circle_grid, coerce_field,
                               factor_inner_realization,
                               grid_size_from_spacing, is_in_Cplus,
                               is_in_Lplus, make_covariance_extension_filter,
                               matrix_from_json, matrix_to_json,
                               prior_from_outer, prior_from_polynomial,
                               series_product)

from conftest import C_REF


class TestFilterBank:
    def test_lag_window_shape(self, fb):
        assert (fb.n, fb.m) == (4, 2)
        # block shift: one more power than the window depth annihilates it
        assert np.all(np.linalg.matrix_power(fb.A, 2) == 0)

    def test_value_at_one(self, fb):
        assert_allclose(fb.eval(1.0), np.vstack([np.eye(2), np.eye(2)]),
                        atol=1e-14)

    def test_value_at_minus_one(self, fb):
        assert_allclose(fb.eval(-1.0), np.vstack([np.eye(2), -np.eye(2)]),
                        atol=1e-14)

    def test_bottom_rows_are_pure_delay(self, fb):
        z = np.exp(1j * np.linspace(-2.9, 3.0, 7))
        Gz = fb.eval_grid(z)
        want = np.eye(2) / z[:, None, None]
        assert_allclose(fb.B.T @ Gz, want, atol=1e-14)

    def test_eval_matches_dense_solve(self, fb):
        z = 2.0 + 0.5j
        want = np.linalg.solve(z * np.eye(fb.n) - fb.A, fb.B)
        assert_allclose(fb.eval(z), want, rtol=1e-14)
        assert_allclose(fb.eval_grid([z])[0], want, rtol=1e-14)

    def test_eval_at_pole_raises(self):
        fb = FilterBank(np.array([[0.5]]), np.array([[1.0]]))
        with pytest.raises(EvaluationError):
            fb.eval(0.5)

    def test_rejects_unstable_A(self):
        with pytest.raises(MembershipError, match="Schur"):
            FilterBank(np.array([[1.0]]), np.array([[1.0]]))

    def test_rejects_rank_deficient_B(self):
        A = np.zeros((2, 2))
        B = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(MembershipError, match="rank"):
            FilterBank(A, B)

    def test_rejects_unreachable_pair(self):
        A = np.diag([0.5, 0.3])
        B = np.array([[1.0], [0.0]])
        with pytest.raises(MembershipError, match="reachable"):
            FilterBank(A, B)

    def test_preset_argument_validation(self):
        with pytest.raises(ValueError):
            make_covariance_extension_filter(0, 1)
        with pytest.raises(ValueError):
            make_covariance_extension_filter(2, -1)


class TestGrids:
    def test_circle_grid_range_and_spacing(self):
        theta = circle_grid(8)
        assert theta.shape == (8,)
        assert_allclose(np.diff(theta), 2 * np.pi / 8)
        assert_allclose(theta[-1], np.pi)
        assert theta[0] > -np.pi

    def test_grid_size_from_spacing(self):
        assert grid_size_from_spacing(1e-3) == round(2 * np.pi / 1e-3)
        n = grid_size_from_spacing(1e-4)
        assert abs(2 * np.pi / n - 1e-4) < 1e-8


class TestSystems:
    def test_series_product_is_pointwise_product(self, rng):
        a = StateSpaceSystem(np.array([[0.4]]), np.array([[1.0, 0.0]]),
                             np.array([[1.0], [2.0]]),
                             rng.standard_normal((2, 2)))
        b = StateSpaceSystem(np.array([[-0.3]]), np.array([[0.5, 1.0]]),
                             np.array([[1.0], [0.0]]),
                             rng.standard_normal((2, 2)))
        prod = series_product(a, b)
        assert prod.n_states == 2
        for z in np.exp(1j * np.array([0.3, 1.1, -2.0])):
            assert_allclose(prod.eval(z), a.eval(z) @ b.eval(z), atol=1e-13)

    def test_cascade_applies_scalar_per_channel(self, rng):
        outer = StateSpaceSystem(np.array([[0.6]]), np.array([[1.0]]),
                                 np.array([[0.7]]), np.array([[1.2]]))
        inner = StateSpaceSystem(np.diag([0.2, -0.4]),
                                 rng.standard_normal((2, 2)),
                                 rng.standard_normal((3, 2)),
                                 rng.standard_normal((3, 2)))
        prod = cascade(outer, inner)
        assert prod.n_states == inner.n_states + 2
        for z in np.exp(1j * np.array([0.0, 0.9, 2.5])):
            assert_allclose(prod.eval(z), inner.eval(z) * outer.eval(z)[0, 0],
                            atol=1e-12)


class TestStableFactorSet:
    def test_reference_point_is_member(self, fb, c_ref):
        diag = is_in_Cplus(fb, c_ref)
        assert diag
        assert diag.member
        assert_allclose(diag.spectral_radius, 0.9848730882707679, rtol=1e-9)

    def test_flat_parameter_is_member(self, fb):
        assert is_in_Cplus(fb, fb.B.T).member

    def test_singular_CB_rejected(self, fb):
        C = np.array([[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
        diag = is_in_Cplus(fb, C)
        assert not diag
        assert any("diagonal" in msg for msg in diag.failures)

    def test_upper_triangular_CB_rejected(self, fb):
        C = np.array([[0.0, 0.0, 1.0, 1.0], [0.0, 0.0, 0.0, 1.0]])
        diag = is_in_Cplus(fb, C)
        assert not diag
        assert diag.max_upper_abs > 0.5

    def test_shape_mismatch_raises(self, fb):
        with pytest.raises(ValueError):
            is_in_Cplus(fb, np.eye(3))

    def test_parameter_caches_feedback_data(self, fb, c_ref):
        param = FactorParameter(fb, c_ref)
        assert_allclose(param.CB, c_ref @ fb.B, atol=1e-15)
        # closed loop Pi = A - B (CB)^{-1} C A must be Schur stable
        rho = float(np.max(np.abs(np.linalg.eigvals(param.Pi))))
        assert rho < 1.0

    def test_parameter_rejects_nonmember(self, fb):
        C = np.array([[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
        with pytest.raises(MembershipError):
            FactorParameter(fb, C)

    def test_inner_realization_is_pointwise_inverse_factor(self, fb, c_ref):
        # the realization evaluates G (z C G)^{-1} without forming it
        sysr = factor_inner_realization(fb, c_ref)
        for z in np.exp(1j * np.array([0.4, -1.3, 3.0])):
            Gz = fb.eval(z)
            want = Gz @ np.linalg.inv(z * (c_ref @ Gz))
            assert_allclose(sysr.eval(z), want, atol=1e-12)


class TestPositiveCone:
    def test_identity_weight(self, fb):
        diag = is_in_Lplus(fb, np.eye(4))
        assert diag
        # two unit-delay blocks contribute 1 each on the whole circle
        assert_allclose(diag.min_eigenvalue, 2.0, rtol=1e-12)

    def test_negative_weight_rejected(self, fb):
        diag = is_in_Lplus(fb, -np.eye(4))
        assert not diag
        assert diag.min_eigenvalue < 0

    def test_indefinite_but_admissible_weight(self, fb):
        # admissibility is positivity of G* Lam G, not of Lam itself
        Lam = np.eye(4)
        Lam[0, 0] = -0.5
        assert is_in_Lplus(fb, Lam).member

    def test_non_hermitian_raises(self, fb):
        M = np.eye(4)
        M[0, 1] = 1.0
        with pytest.raises(ValueError):
            is_in_Lplus(fb, M)


class TestPriors:
    def test_polynomial_prior_accepts_stable_roots(self, prior_ref):
        roots = np.roots([1.0, -1.0, 0.89])
        assert np.max(np.abs(roots)) < 1.0
        theta = np.array([0.0, 1.0])
        b = np.array([1.0, -1.0, 0.89])
        z = np.exp(1j * theta)
        want = np.abs(b[0] + b[1] / z + b[2] / z ** 2) ** 2
        got = np.abs(prior_ref.sigma_values(theta)) ** 2
        assert_allclose(got, want, rtol=1e-12)

    def test_polynomial_prior_rejects_unstable_root(self):
        with pytest.raises(MembershipError, match="minimum phase"):
            prior_from_polynomial([1.0, -2.0])

    def test_rational_prior_rejects_zero_feedthrough(self):
        sys_ = StateSpaceSystem(np.array([[0.5]]), np.array([[1.0]]),
                                np.array([[1.0]]), np.array([[0.0]]))
        with pytest.raises(MembershipError, match="outer"):
            prior_from_outer(sys_)

    def test_rational_prior_rejects_unstable_zero(self):
        # zero dynamics A - BC/d = 0.5 - 2 = -1.5
        sys_ = StateSpaceSystem(np.array([[0.5]]), np.array([[1.0]]),
                                np.array([[2.0]]), np.array([[1.0]]))
        with pytest.raises(MembershipError, match="outer"):
            prior_from_outer(sys_)


class TestSerialization:
    def test_real_matrix_round_trip(self, rng):
        M = rng.standard_normal((3, 5))
        data = matrix_to_json(M)
        assert isinstance(data[0][0], float)
        assert_allclose(matrix_from_json(data), M, rtol=0, atol=0)

    def test_complex_matrix_round_trip(self, rng):
        M = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        data = matrix_to_json(M)
        assert data[0][0] == [M[0, 0].real, M[0, 0].imag]
        assert_allclose(matrix_from_json(data), M, rtol=0, atol=0)

    def test_bad_payload_raises(self):
        with pytest.raises(ValueError):
            matrix_from_json([])
        with pytest.raises(ValueError):
            matrix_from_json("nope")


class TestFieldCoercion:
    def test_real_field_discards_tiny_imag(self):
        M = np.eye(2) + 1e-15j * np.ones((2, 2))
        out = coerce_field(M, "real")
        assert not np.iscomplexobj(out)

    def test_real_field_rejects_large_imag(self):
        M = np.eye(2) + 1e-6j * np.ones((2, 2))
        with pytest.raises(ValueError, match="imaginary"):
            coerce_field(M, "real")

    def test_complex_field_passes_through(self):
        M = np.eye(2) + 1j
        out = coerce_field(M, "complex")
        assert np.iscomplexobj(out)


def test_reference_parameter_matches_module_constant(fb):
    assert is_in_Cplus(fb, C_REF).member
