import math

import numpy as np
import pytest
from scipy.integrate import quad

from bcsgl.corefn import kt_eval
from bcsgl.glcoeff import (
    coefficient_integrands,
    compute_coefficients,
    dense_trapezoid_coefficients,
    form_factor,
    gl_coefficients,
)

# independent prototype (dense-grid position-space solver) for the 1D well
PROTO_1D = {"lambda0": 0.342726, "lambda1": 0.0108579, "l0_l2_per_D": 2.05332, "l0_l3": 2.61917}


def test_coefficients_positive(coeffs_1d, coeffs_3d):
    for c in (coeffs_1d, coeffs_3d):
        assert c.lambda0 > 0 and c.lambda3 > 0
        assert c.lambda2_per_D > 0


def test_1d_against_prototype(coeffs_1d):
    c = coeffs_1d
    assert c.lambda0 == pytest.approx(PROTO_1D["lambda0"], rel=2e-6)
    assert c.lambda1 == pytest.approx(PROTO_1D["lambda1"], rel=2e-5)
    assert c.lambda0 * c.lambda2_per_D == pytest.approx(PROTO_1D["l0_l2_per_D"], rel=2e-6)
    assert c.lambda0 * c.lambda3 == pytest.approx(PROTO_1D["l0_l3"], rel=2e-6)


def test_form_factor_two_routes_agree(pair_1d, pair_3d):
    for pair in (pair_1d, pair_3d):
        ff = form_factor(pair)
        q = np.linspace(0, pair.grid.q_max, 301)
        a, b = ff(q), ff.via_kernel(q)
        assert np.max(np.abs(a - b)) < 1e-8 * np.max(np.abs(a))


@pytest.mark.parametrize("D", [-1.0, 0.5, 2.0])
def test_lambda2_linear_in_D(pair_1d, coeffs_1d, D):
    c = gl_coefficients(pair_1d, D)
    assert c.lambda2 / D == pytest.approx(coeffs_1d.lambda2_per_D, rel=1e-10)
    assert (c.kappa is None) == (D <= 0)
    if D > 0:
        assert c.kappa == pytest.approx(math.sqrt(c.lambda2))


def test_zero_D_has_no_kappa(coeffs_1d):
    c = coeffs_1d.with_D(0.0)
    assert c.lambda2 == 0.0 and c.kappa is None


@pytest.mark.parametrize("s", [0.5, 3.0])
def test_pair_scaling_law(pair_1d, coeffs_1d, s):
    c = gl_coefficients(pair_1d.scaled(s), 1.0)
    ref = coeffs_1d
    assert c.lambda0 == pytest.approx(s * s * ref.lambda0, rel=1e-10)
    assert c.lambda3 == pytest.approx(s * s * ref.lambda3, rel=1e-10)
    assert c.lambda1 == pytest.approx(ref.lambda1, rel=1e-10)
    assert c.lambda2 == pytest.approx(ref.lambda2, rel=1e-10)


def test_adaptive_against_dense_oracle(pair_1d, pair_3d):
    for pair in (pair_1d, pair_3d):
        ff = form_factor(pair)
        a = compute_coefficients(ff, pair.T_c, pair.mu, 1.0)
        b = dense_trapezoid_coefficients(ff, pair.T_c, pair.mu, 1.0)
        for name in ("lambda0", "lambda1", "lambda2", "lambda3"):
            assert getattr(a, name) == pytest.approx(getattr(b, name), rel=1e-6)


def test_lambda3_integrand_positive(pair_3d):
    ff = form_factor(pair_3d)
    q = np.linspace(1e-3, pair_3d.grid.q_max, 2001)
    rows = coefficient_integrands(ff(q), q, pair_3d.T_c, pair_3d.mu, 3)
    assert np.all(rows[3] >= 0)
    assert np.all(rows[2] >= 0)


def _pair_susceptibility(pair, P):
    """sum over q of |alpha|^2 (L_P(q) - K(q)): the pair operator at total momentum P."""
    T, mu, d = pair.T_c, pair.mu, pair.dimension
    ff = form_factor(pair)
    ct, wt = np.polynomial.legendre.leggauss(96)

    def L(e1, e2):
        return (e1 + e2) / (np.tanh(e1 / (2 * T)) + np.tanh(e2 / (2 * T)))

    def f(q):
        K = kt_eval(q * q - mu, T)
        ah = ff(np.array([q]))[0] / (2 * K)
        if d == 1:
            lp = 0.5 * (L((q + P / 2) ** 2 - mu, (q - P / 2) ** 2 - mu) + L((q - P / 2) ** 2 - mu, (q + P / 2) ** 2 - mu))
            return ah * ah * (lp - K) / np.pi
        e = q * q + P * P / 4 - mu
        avg = 0.5 * np.sum(wt * L(e + q * P * ct, e - q * P * ct))
        return ah * ah * (avg - K) * q * q / (2 * np.pi**2)

    kf = math.sqrt(mu)
    return quad(f, 0, pair.grid.q_max, points=[kf], epsabs=0, epsrel=1e-12, limit=400)[0]


@pytest.mark.parametrize("which", ["1d", "3d"])
def test_lambda0_is_gradient_stiffness(which, pair_1d, coeffs_1d, pair_3d, coeffs_3d):
    # finite-momentum oracle: G(P) = lambda0 P^2 + O(P^4)
    pair, c = (pair_1d, coeffs_1d) if which == "1d" else (pair_3d, coeffs_3d)
    P = 0.01
    assert _pair_susceptibility(pair, P) / P**2 == pytest.approx(c.lambda0, rel=1e-4)


def test_report_keys(coeffs_1d):
    r = coeffs_1d.report()
    for key in ("tc", "mu", "d", "D", "lambda0", "lambda1", "lambda2", "lambda3", "kappa", "convention", "grid"):
        assert key in r
    assert r["grid"]["max_rel_error_estimate"] < 1e-9
