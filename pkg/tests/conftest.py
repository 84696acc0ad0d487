"""Shared fixtures: the lag-window filter bank, a reference prior and
parameter, and samplers for admissible random inputs."""

import numpy as np
import pytest

from spectral_homotopy import (FactorParameter, make_chart,
                               make_covariance_extension_filter,
                               maxent_initialization, moment_g_statespace,
                               prior_from_polynomial, solve_dlyap)

# reference point used throughout: a parameter whose two coordinate systems
# have sharply different conditioning
C_REF = np.array([[0.5, 0.65, 1.0, 0.0],
                  [-2.2615, -1.0, 2.0, 1.0]])
B_REF = [1.0, -1.0, 0.89]


@pytest.fixture(scope="session")
def fb():
    return make_covariance_extension_filter(2, 1)


@pytest.fixture(scope="session")
def chart(fb):
    return make_chart(fb)


@pytest.fixture(scope="session")
def prior_ref():
    return prior_from_polynomial(B_REF)


@pytest.fixture
def c_ref():
    return C_REF.copy()


@pytest.fixture
def param_ref(fb):
    return FactorParameter(fb, C_REF)


@pytest.fixture
def rng():
    return np.random.default_rng(0x5EED)


@pytest.fixture
def random_sigma(fb, chart):
    """Sampler for feasible covariances: project a random symmetric matrix
    onto the attainable set, then shift it well into the positive cone
    (the identity is itself attainable for this filter bank)."""

    def sample(rng):
        X = rng.standard_normal((fb.n, fb.n))
        Xp = chart.project_range_gamma(0.5 * (X + X.T))
        lam = float(np.min(np.linalg.eigvalsh(Xp)))
        return Xp + (abs(lam) + 0.5 + rng.random()) * np.eye(fb.n)

    return sample


@pytest.fixture
def random_param(fb, random_sigma):
    # the flat-prior solution of a random feasible covariance is a cheap
    # source of interior points of the stable factor set
    def sample(rng):
        return maxent_initialization(fb, random_sigma(rng))

    return sample


@pytest.fixture
def random_prior():
    def sample(rng):
        while True:
            b = np.concatenate([[1.0], 0.6 * rng.standard_normal(2)])
            try:
                return prior_from_polynomial(b)
            except Exception:
                continue

    return sample


@pytest.fixture
def random_pair(random_param, random_prior):
    def sample(rng):
        return random_prior(rng), random_param(rng)

    return sample


def random_additive_quadruple(rng, n=3, p=2):
    """Random (F, G, H, J) with Z + Z* = S S* on the circle by construction,
    together with the generating stable system S = (A, B, C, D)."""
    A = rng.standard_normal((n, n))
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    A *= (0.3 + 0.6 * rng.random()) / max(rho, 1e-9)
    B = rng.standard_normal((n, p))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, p)) + 2.0 * np.eye(p)
    Pc = solve_dlyap(A, B @ B.T)
    G = A @ Pc @ C.T + B @ D.T
    J = 0.5 * (C @ Pc @ C.T + D @ D.T)
    return (A, G, C, J), (A, B, C, D)


def fd_direction(chart, rng):
    # directions for finite-difference probes must stay inside the factor
    # slice, otherwise the perturbed point leaves the admissible set
    return chart.factor_from_coords(rng.standard_normal(chart.dim))


def relative_error(got, want):
    want = np.asarray(want)
    scale = float(np.linalg.norm(want))
    return float(np.linalg.norm(np.asarray(got) - want)) / max(scale, 1e-300)


@pytest.fixture
def sigma_ref(fb, prior_ref, param_ref):
    return moment_g_statespace(fb, prior_ref, param_ref)
