import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from reactive_paths import special_laws as sl
from reactive_paths.errors import DomainError, PrecisionLoss

mp.mp.dps = 40


def ou_oracle(b, x, eps, s):
    """Conditioned transform from Kummer solutions of eps u'' + y u' = s u."""
    B = mp.mpf(b) / mp.sqrt(eps)
    z = mp.mpf(x) / mp.sqrt(eps)
    s = mp.mpf(s)
    committor = (mp.erf(z / mp.sqrt(2)) + mp.erf(B / mp.sqrt(2))) / (2 * mp.erf(B / mp.sqrt(2)))

    def even(t):
        return mp.hyp1f1(-s / 2, 0.5, -t * t / 2)

    def odd(t):
        return t * mp.hyp1f1((1 - s) / 2, 1.5, -t * t / 2)

    return float((even(z) / even(B) + odd(z) / odd(B)) / 2 / committor)


def bm_oracle(a, b, x, mu, s):
    """Two-exponential solution of u''/2 + mu u' = s u, divided by the committor."""
    a, b, x, mu, s = map(mp.mpf, (a, b, x, mu, s))
    k = mp.sqrt(mu * mu + 2 * s)
    r1, r2 = -mu + k, -mu - k
    u = (mp.exp(r1 * (x - a)) - mp.exp(r2 * (x - a))) / (mp.exp(r1 * (b - a)) - mp.exp(r2 * (b - a)))
    if mu == 0:
        h = (x - a) / (b - a)
    else:
        h = mp.expm1(-2 * mu * (x - a)) / mp.expm1(-2 * mu * (b - a))
    return float(u / h)


def test_gamma_against_math():
    for z in (0.1, 0.5, 1.0, 2.5, 7.3, 30.0, 150.0):
        assert sl.log_gamma_fn(z) == pytest.approx(math.lgamma(z), rel=1e-13, abs=1e-13)
    for z in (0.1, 0.5, 1.0, 2.5, 7.3, 30.0):
        assert sl.gamma_fn(z) == pytest.approx(math.gamma(z), rel=1e-13)
    # above 140 the value is exp(log Gamma), conditioned by log Gamma ~ 600
    assert sl.gamma_fn(150.0) == pytest.approx(math.gamma(150.0), rel=1e-11)
    with pytest.raises(DomainError):
        sl.gamma_fn(0.0)


def test_euler_gamma_series():
    assert sl.euler_gamma() == pytest.approx(float(mp.euler), abs=1e-15)


@pytest.mark.parametrize("nu", [0.5, 1.0, 1.5, 2.0, 3.7])
@pytest.mark.parametrize("x", [-6.0, -1.2, 0.0, 0.7, 4.0, 12.0])
def test_cylinder_function_against_mpmath(nu, x):
    ref = float(mp.pcfd(-nu, x))
    assert sl.parabolic_cylinder_D(nu, x) == pytest.approx(ref, rel=1e-10)


def test_log_phi_extreme_arguments():
    # D_{-nu}(x) e^{-x^2/4} without overflow, far outside double range of D itself
    ref = float(mp.log(mp.pcfd(-1.5, -60) * mp.exp(-mp.mpf(60) ** 2 / 4)))
    assert sl.log_phi(1.5, -60.0) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.05])
@pytest.mark.parametrize("x", [-0.89, -0.3, 0.0, 0.5])
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, -0.4])
def test_ou_exact_against_kummer_oracle(eps, x, s):
    assert sl.ou_laplace_exact(0.9, x, eps, s) == pytest.approx(ou_oracle(0.9, x, eps, s), rel=1e-9)


def test_ou_exact_edges():
    assert sl.ou_laplace_exact(0.9, 0.1, 0.1, 0.0) == 1.0
    with pytest.raises(DomainError):
        sl.ou_laplace_exact(0.9, 0.1, 0.1, -1.0)
    with pytest.raises(DomainError):
        sl.ou_laplace_exact(0.9, 0.95, 0.1, 1.0)
    with pytest.raises(PrecisionLoss):
        sl.ou_laplace_exact(0.9, -0.9 + 1e-13, 0.1, 1.0)


def test_ou_exact_far_into_small_temperature():
    # b / sqrt(eps) = 90: still resolved in the log domain
    val = sl.ou_laplace_exact(0.9, -0.89, 1e-4, 0.5)
    assert val / sl.ou_laplace_asymptotic(0.9, -0.89, 1e-4, 0.5) == pytest.approx(1, abs=1e-3)


def test_ou_asymptotic_branches():
    eps, s = 1e-3, 0.5
    assert sl.ou_laplace_asymptotic(0.9, -0.89, eps, s) == pytest.approx(
        math.gamma(1 + s) * (eps / (0.89 * 0.9)) ** s)
    assert sl.ou_laplace_asymptotic(0.9, 0.0, eps, s) == pytest.approx(
        sl.TildeGLaw.laplace(s) * (math.sqrt(eps) / 0.9) ** s)
    assert sl.ou_laplace_asymptotic(0.9, 0.3, eps, s) == pytest.approx((0.3 / 0.9) ** s)


@given(st.floats(0.2, 5.0),
       st.one_of(st.just(0.0), st.floats(-0.8, -1e-3), st.floats(1e-3, 0.8)),
       st.floats(0.0, 3.0))
def test_ou_asymptotic_alpha_rescaling(alpha, x, s):
    # T_alpha(x, b) = T_1(sqrt(alpha) x, sqrt(alpha) b) / alpha
    eps, b = 1e-3, 0.9
    r = math.sqrt(alpha)
    lhs = sl.ou_laplace_asymptotic(b, x, eps, s, alpha)
    rhs = sl.ou_laplace_asymptotic(b * r, x * r, eps, s / alpha)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("mu", [0.0, -0.7, 2.0, -30.0])
@pytest.mark.parametrize("x", [-0.9, -0.5, -0.01])
def test_bm_drift_against_oracle(mu, x):
    a, b, s = -1.0, 0.0, 0.8
    if x == a:
        ref = bm_oracle(a, b, a + 1e-20, mu, s)
    else:
        ref = bm_oracle(a, b, x, mu, s)
    assert sl.bm_drift_laplace(a, b, x, mu, s) == pytest.approx(ref, rel=1e-11)


def test_bm_drift_start_at_left_end_is_limit():
    a, b, mu, s = -1.0, 0.0, -2.0, 1.0
    assert sl.bm_drift_laplace(a, b, a, mu, s) == pytest.approx(
        sl.bm_drift_laplace(a, b, a + 1e-9, mu, s), rel=1e-7)
    assert sl.bm_drift_laplace(a, b, b, mu, s) == 1.0


def test_flat_transform_and_moments():
    b, eps = 1.0, 0.5
    assert sl.flat_laplace(b, eps, 0.0) == 1.0
    z = math.sqrt(4 * b * b * 0.3 / eps)
    assert sl.flat_laplace(b, eps, 0.3) == pytest.approx(z / math.sinh(z), rel=1e-14)
    mean, var = sl.flat_moments(b, eps)
    assert mean == pytest.approx(2 * b * b / (3 * eps))
    assert var == pytest.approx(8 * b**4 / (45 * eps**2))
    # moments from the transform: E T = -L'(0), Var T = L''(0) - L'(0)^2
    L = lambda s: sl.flat_laplace(b, eps, s)
    h = 1e-4
    m1 = -(L(h) - L(0)) / h
    assert m1 == pytest.approx(mean, rel=1e-3)
    # the branches near z = 0 and z > 700 meet the bulk formula
    assert sl.flat_laplace(1.0, 1.0, 1e-10) == pytest.approx(1 - 4e-10 / 6, rel=1e-15)
    zb = 705.0
    big = sl.flat_laplace(1.0, 1.0, zb * zb / 4)
    assert big == pytest.approx(float(mp.mpf(zb) / mp.sinh(zb)), rel=1e-12)


def test_flat_standardized_has_mean_zero_variance_one():
    h = 1e-4
    f = sl.flat_standardized_laplace
    first = (f(h) - f(-h)) / (2 * h)
    second = (f(h) - 2 * f(0) + f(-h)) / h**2
    assert first == pytest.approx(0.0, abs=1e-6)
    assert second == pytest.approx(1.0, rel=1e-5)


def test_gumbel_law():
    g = sl.GumbelLaw(1.5, 2.0)
    q = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(g.cdf(g.quantile(q)), q, rtol=1e-13)
    assert g.mean == pytest.approx(1.5 + 2 * float(mp.euler))
    assert g.variance == pytest.approx(4 * math.pi**2 / 6)
    assert sl.GumbelLaw.standard_laplace(0.5) == pytest.approx(math.gamma(1.5))
    x = sl.GumbelLaw().sample(200_000, np.random.default_rng(1))
    assert abs(x.mean() - float(mp.euler)) < 0.01
    with pytest.raises(DomainError):
        sl.GumbelLaw(0.0, 0.0)


@pytest.mark.parametrize("s", [-0.5, 0.5, 1.0, 3.0])
def test_tilde_g_transform_is_absolute_normal_moment(s):
    ref = mp.quad(lambda z: abs(z) ** s * mp.exp(-z * z / 2) / mp.sqrt(2 * mp.pi), [-mp.inf, 0, mp.inf])
    assert sl.TildeGLaw.laplace(s) == pytest.approx(float(ref), rel=1e-12)
    assert sl.TildeGLaw.laplace(-1.0) == math.inf


def test_tilde_g_moments_as_log_normal_moments():
    law = sl.TildeGLaw()
    # E g(-log|N|) = int_0^inf 2 phi(z) g(-log z) dz
    m1 = mp.quad(lambda z: -2 * mp.npdf(z) * mp.log(z), [0, 1, mp.inf])
    m2 = mp.quad(lambda z: 2 * mp.npdf(z) * mp.log(z) ** 2, [0, 1, mp.inf])
    t = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(law.cdf(t), [float(2 * mp.ncdf(-mp.exp(-v))) for v in t], rtol=1e-13)
    assert law.mean == pytest.approx(float(m1), rel=1e-10)
    assert law.variance == pytest.approx(float(m2 - m1**2), rel=1e-10)
    x = law.sample(100_000, np.random.default_rng(3))
    assert abs(x.mean() - law.mean) < 0.02


def test_inverse_gaussian():
    ig = sl.InverseGaussianLaw(2.0, 3.0)
    from scipy import integrate
    val, _ = integrate.quad(lambda t: math.exp(-0.4 * t) * ig.density(np.array([t]))[0], 0, np.inf)
    assert ig.laplace(0.4) == pytest.approx(val, rel=1e-8)


def test_gamma_examples():
    assert sl.gamma_fn(1.0) == pytest.approx(1.0, rel=1e-15)
    assert sl.gamma_fn(0.5) == pytest.approx(1.7724539, abs=1e-7)
    # Gamma(3.5) from Gamma(0.5) by the recursion
    assert sl.gamma_fn(3.5) == pytest.approx(2.5 * 1.5 * 0.5 * math.sqrt(math.pi), rel=1e-12)


def test_standard_gumbel_examples():
    g = sl.GumbelLaw()
    assert float(g.density(0.0)) == pytest.approx(math.exp(-1), rel=1e-15)
    assert float(g.cdf(0.0)) == pytest.approx(math.exp(-1), rel=1e-15)
    x = g.sample(10**6, np.random.default_rng(3))
    assert abs(x.mean() - sl.euler_gamma()) <= 3 * (math.pi / math.sqrt(6)) / 1e3


def test_cylinder_function_examples():
    assert sl.phi_nu(1.0, 0.0) == pytest.approx(1.2533141, abs=1e-7)
    assert sl.parabolic_cylinder_D(1.0, 0.0) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
    b = 6.0
    assert sl.phi_nu(1.0, b) == pytest.approx(math.exp(-b * b / 2) / b, rel=0.03)
    assert sl.phi_nu(2.0, -b) == pytest.approx(math.sqrt(2 * math.pi) / math.gamma(2.0) * b,
                                               rel=0.03)


def test_ou_transform_examples():
    from reactive_paths.exit_laws import ExitProblem, laplace_bvp
    from reactive_paths.potentials import Potential
    assert sl.ou_laplace_exact(0.9, -0.89, 0.05, 0.0) == 1.0
    num = laplace_bvp(ExitProblem(Potential.quadratic(1.0), -0.9, 0.9, -0.89, 0.05), 0.5).value
    assert sl.ou_laplace_exact(0.9, -0.89, 0.05, 0.5) == pytest.approx(num, rel=1e-6)
    eps = 1e-4
    assert sl.ou_laplace_exact(0.9, -0.89, eps, 0.5) == pytest.approx(
        math.gamma(1.5) * (eps / (0.89 * 0.9)) ** 0.5, rel=0.02)


def test_ou_asymptotic_examples():
    assert sl.ou_laplace_asymptotic(0.9, -0.5, 1e-3, 0.0) == 1.0
    eps, b = 1e-3, 0.9
    b_eps = b / math.sqrt(eps)
    assert sl.ou_laplace_asymptotic(b, 0.0, eps, 1.0) == pytest.approx(
        2**0.5 / math.sqrt(math.pi) * math.gamma(1.0) / b_eps, rel=1e-12)
    for e in (1e-2, 1e-6):
        assert sl.ou_laplace_asymptotic(b, 0.3, e, 0.7) == pytest.approx((0.3 / b) ** 0.7)


def test_drifted_bm_examples():
    assert sl.bm_drift_laplace(-1.0, 0.0, -0.4, 0.8, 0.0) == pytest.approx(1.0, abs=1e-15)
    for s in (0.3, 2.0):
        assert sl.bm_drift_laplace(-1.0, 0.0, -0.4, 0.8, s) == pytest.approx(
            sl.bm_drift_laplace(-1.0, 0.0, -0.4, -0.8, s), rel=1e-13)
    mu, x, b, s = 1.5, -0.3, 0.0, 0.7
    ig = math.exp(mu * (b - x) * (1 - math.sqrt(1 + 2 * s / mu**2)))
    assert sl.bm_drift_laplace(x - 50 / mu, b, x, mu, s) == pytest.approx(ig, rel=1e-8)


def test_flat_examples():
    assert sl.flat_laplace(1.0, 0.5, 1e-9) == pytest.approx(1.0, abs=1e-8)
    mean, var = sl.flat_moments(1.0, 0.5)
    assert mean == pytest.approx(4 / 3) and var == pytest.approx(32 / 45)
    h = 1e-5
    lg = [math.log(sl.flat_standardized_laplace(s)) for s in (-h, 0.0, h)]
    assert (lg[0] - lg[2]) / (2 * h) == pytest.approx(0.0, abs=1e-6)
    assert (lg[0] - 2 * lg[1] + lg[2]) / h**2 == pytest.approx(1.0, abs=1e-3)
