"""Stein and Riccati solvers, triangular factorizations."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral_homotopy import (FactorizationError, MembershipError,
                               SolverError, circle_grid, h_inverse,
                               make_chart, reverse_cholesky,
                               solve_dare_appendix, solve_dare_lambda,
                               solve_dlyap, standard_cholesky)

from conftest import C_REF, random_additive_quadruple


def stein_residual(A1, Q, X):
    return np.linalg.norm(X - A1 @ X @ A1.conj().T - Q)


class TestStein:
    def test_scalar_closed_form(self):
        # x - 0.25 x = 1
        X = solve_dlyap(np.array([[0.5]]), np.array([[1.0]]))
        assert_allclose(X, [[4.0 / 3.0]], rtol=1e-14)

    def test_nilpotent_gives_finite_sum(self, fb):
        Q = np.eye(4)
        X = solve_dlyap(fb.A, Q)
        want = Q + fb.A @ Q @ fb.A.T
        assert_allclose(X, want, atol=1e-14)

    def test_matches_truncated_series(self, rng):
        A1 = rng.standard_normal((3, 3))
        A1 *= 0.5 / np.max(np.abs(np.linalg.eigvals(A1)))
        Q0 = rng.standard_normal((3, 3))
        Q = Q0 + Q0.T
        X = solve_dlyap(A1, Q)
        S = np.zeros((3, 3))
        T = Q.copy()
        for _ in range(200):
            S += T
            T = A1 @ T @ A1.T
        assert_allclose(X, S, rtol=1e-12)
        assert stein_residual(A1, Q, X) < 1e-12

    def test_schur_and_series_methods_agree(self, rng):
        A1 = 0.4 * rng.standard_normal((4, 4))
        Q0 = rng.standard_normal((4, 4))
        Q = Q0 @ Q0.T
        Xs = solve_dlyap(A1, Q, method="schur")
        Xr = solve_dlyap(A1, Q, method="series")
        assert_allclose(Xs, Xr, rtol=1e-10, atol=1e-12)

    def test_rejects_unstable_A(self):
        with pytest.raises(MembershipError, match="Schur"):
            solve_dlyap(np.array([[1.0]]), np.array([[1.0]]))

    def test_real_inputs_give_real_output(self, rng):
        A1 = 0.3 * rng.standard_normal((3, 3))
        Q = np.eye(3)
        assert not np.iscomplexobj(solve_dlyap(A1, Q))


class TestCholesky:
    def test_standard_known_factor(self):
        M = np.array([[4.0, 2.0], [2.0, 2.0]])
        L = standard_cholesky(M)
        assert_allclose(L, [[2.0, 0.0], [1.0, 1.0]], rtol=1e-14)

    def test_reverse_known_factor(self):
        # lower-triangular L with M = L* L (anti-ordered pivots)
        M = np.array([[2.0, 1.0], [1.0, 1.0]])
        L = reverse_cholesky(M)
        assert_allclose(L, [[1.0, 0.0], [1.0, 1.0]], rtol=1e-14)
        assert_allclose(L.conj().T @ L, M, rtol=1e-14)

    def test_reverse_diagonal(self):
        L = reverse_cholesky(np.diag([4.0, 9.0]))
        assert_allclose(L, np.diag([2.0, 3.0]), rtol=1e-14)

    def test_both_conventions_factor_random_spd(self, rng):
        for _ in range(10):
            X = rng.standard_normal((4, 4))
            M = X @ X.T + 4 * np.eye(4)
            Ls = standard_cholesky(M)
            Lr = reverse_cholesky(M)
            assert_allclose(Ls @ Ls.T, M, rtol=1e-12)
            assert_allclose(Lr.T @ Lr, M, rtol=1e-12)
            assert np.all(np.diag(Ls) > 0)
            assert np.all(np.diag(Lr) > 0)
            assert_allclose(np.triu(Ls, 1), 0, atol=1e-15)
            assert_allclose(np.triu(Lr, 1), 0, atol=1e-15)

    def test_indefinite_input_names_pivot(self):
        M = np.diag([1.0, -1.0])
        with pytest.raises(FactorizationError) as exc:
            standard_cholesky(M)
        assert exc.value.pivot == 1


def dare_lambda_residual(fb, Lam, P):
    A, B = fb.A, fb.B
    M = B.conj().T @ P @ B
    K = np.linalg.solve(M, B.conj().T @ P @ A)
    return np.linalg.norm(
        P - (A.conj().T @ P @ A - A.conj().T @ P @ B @ K + Lam))


class TestLagWeightRiccati:
    def test_flat_weight_closed_form(self, fb):
        # Lambda = BB* reproduces the pure-delay factor: P = BB*, L = I
        Lam = fb.B @ fb.B.T
        sol = solve_dare_lambda(fb, Lam)
        assert_allclose(sol.P, Lam, atol=1e-13)
        assert_allclose(sol.L, np.eye(2), atol=1e-13)
        assert_allclose(sol.closed_loop, fb.A, atol=1e-13)

    def test_scalar_closed_form(self):
        from spectral_homotopy import FilterBank
        fb1 = FilterBank(np.array([[0.7]]), np.array([[1.0]]))
        sol = solve_dare_lambda(fb1, np.array([[2.5]]))
        # for m = n = 1 the quadratic term cancels the linear one exactly
        assert_allclose(sol.P, [[2.5]], rtol=1e-13)
        assert_allclose(sol.closed_loop, [[0.0]], atol=1e-13)
        assert_allclose(sol.L, [[np.sqrt(2.5)]], rtol=1e-13)

    def test_reference_weight(self, fb, chart, param_ref):
        Lam = h_inverse(chart, param_ref)
        sol = solve_dare_lambda(fb, Lam)
        assert dare_lambda_residual(fb, Lam, sol.P) <= 1e-10 * (
            1 + np.linalg.norm(sol.P))
        rho = float(np.max(np.abs(np.linalg.eigvals(sol.closed_loop))))
        assert_allclose(rho, 0.9848730882707679, rtol=1e-9)
        # L is lower triangular with positive diagonal, B*PB = L*L
        assert_allclose(np.triu(sol.L, 1), 0, atol=1e-14)
        assert np.all(np.diag(sol.L) > 0)
        assert_allclose(sol.L.conj().T @ sol.L,
                        fb.B.T @ sol.P @ fb.B, rtol=1e-12)

    def test_methods_agree(self, fb, chart, random_param, rng):
        for _ in range(3):
            Lam = h_inverse(chart, random_param(rng))
            sd = solve_dare_lambda(fb, Lam, method="doubling")
            sf = solve_dare_lambda(fb, Lam, method="fixed-point")
            assert_allclose(sd.P, sf.P, rtol=1e-9, atol=1e-11)

    def test_inadmissible_weight_rejected(self, fb):
        with pytest.raises(MembershipError, match="positive"):
            solve_dare_lambda(fb, -np.eye(4))

    def test_shape_mismatch(self, fb):
        with pytest.raises(ValueError):
            solve_dare_lambda(fb, np.eye(3))


def additive_residual(F, G, H, J, P):
    R = J + J.conj().T
    S = G + F @ P @ H.conj().T
    M = R + H @ P @ H.conj().T
    return np.linalg.norm(
        P - (F @ P @ F.conj().T - S @ np.linalg.solve(M, S.conj().T)))


class TestAdditiveRiccati:
    def test_constant_part_short_circuits(self):
        # H = 0: nothing depends on P, factor is the constant square root
        F = np.array([[0.5]])
        sol = solve_dare_appendix(F, np.array([[1.0]]), np.array([[0.0]]),
                                  np.array([[2.0]]))
        assert_allclose(sol.P, [[0.0]], atol=0)
        assert_allclose(sol.L, [[2.0]], rtol=1e-14)
        assert sol.method == "degenerate"

    def test_random_positive_quadruples(self, rng):
        z = np.exp(1j * circle_grid(512))
        for _ in range(5):
            (F, G, H, J), (A, B, Cs, D) = random_additive_quadruple(rng)
            # construction promises Z + Z* = S S* on the circle; verify the
            # sampler before trusting it
            I = np.eye(F.shape[0])
            Zg = J + np.einsum(
                "ij,kjl->kil", H,
                np.linalg.solve(z[:, None, None] * I - F,
                                np.broadcast_to(G + 0j, (512,) + G.shape)))
            Sg = D + np.einsum(
                "ij,kjl->kil", Cs,
                np.linalg.solve(z[:, None, None] * I - A,
                                np.broadcast_to(B + 0j, (512,) + B.shape)))
            assert_allclose(Zg + Zg.conj().transpose(0, 2, 1),
                            Sg @ Sg.conj().transpose(0, 2, 1), atol=1e-10)
            sol = solve_dare_appendix(F, G, H, J)
            assert additive_residual(F, G, H, J, sol.P) <= 1e-10 * (
                1 + np.linalg.norm(sol.P))
            rho = float(np.max(np.abs(np.linalg.eigvals(sol.closed_loop))))
            assert rho < 1.0

    def test_methods_agree(self, rng):
        (F, G, H, J), _ = random_additive_quadruple(rng)
        sd = solve_dare_appendix(F, G, H, J, method="doubling")
        sf = solve_dare_appendix(F, G, H, J, method="fixed-point")
        assert_allclose(sd.P, sf.P, rtol=1e-9, atol=1e-11)

    def test_rejects_indefinite_circle_values(self, rng):
        # Z(z) = 0.1 + 1/(z - 0.5) dips negative on the circle
        with pytest.raises(MembershipError, match="circle"):
            solve_dare_appendix(np.array([[0.5]]), np.array([[1.0]]),
                                np.array([[1.0]]), np.array([[0.1]]))

    def test_rejects_indefinite_constant_term(self):
        with pytest.raises(FactorizationError, match="positive"):
            solve_dare_appendix(np.array([[0.5]]), np.array([[0.2]]),
                                np.array([[0.1]]), np.array([[-1.0]]))

    def test_rejects_unstable_F(self):
        with pytest.raises(MembershipError, match="stable"):
            solve_dare_appendix(np.array([[1.1]]), np.array([[1.0]]),
                                np.array([[1.0]]), np.array([[5.0]]))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            solve_dare_appendix(np.eye(2) * 0.1, np.ones((3, 1)),
                                np.ones((1, 2)), np.ones((1, 1)))
