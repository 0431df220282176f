"""Special functions and closed-form exit-time laws.

Contents
--------
gamma_fn, log_gamma_fn
    Lanczos approximation of Euler's Gamma function.
euler_gamma
    Euler-Mascheroni constant from an Euler-Maclaurin accelerated series.
GumbelLaw, TildeGLaw, InverseGaussianLaw
    The limit laws and their transforms.
parabolic_cylinder_D, log_phi
    ``D_{-nu}`` from its integral representation, and the log of
    ``phi_nu(y) = exp(-y^2/4) D_{-nu}(y)``.
ou_laplace_exact, ou_laplace_asymptotic
    Exit-time Laplace transform of the repulsive Ornstein-Uhlenbeck process.
bm_drift_laplace, flat_laplace, flat_moments, flat_standardized_laplace
    Brownian motion with drift and driftless Brownian motion.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, PrecisionLoss, QuadratureFailure

# Lanczos coefficients, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _lanczos_sum(z):
    # z already shifted by -1
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (z + i)
    return acc


def log_gamma_fn(z):
    """``log Gamma(z)`` for ``z > 0``."""
    z = float(z)
    if not z > 0:
        raise DomainError("Gamma is only provided for z > 0")
    if z < 0.5:
        return log_gamma_fn(z + 1.0) - math.log(z)
    z -= 1.0
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma_fn(z):
    """Euler's Gamma function for ``z > 0``."""
    z = float(z)
    if not z > 0:
        raise DomainError("Gamma is only provided for z > 0")
    if z < 0.5:
        return gamma_fn(z + 1.0) / z
    if z > 140:
        return math.exp(log_gamma_fn(z))
    zm = z - 1.0
    t = zm + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (zm + 0.5) * math.exp(-t) * _lanczos_sum(zm)


@functools.lru_cache(maxsize=None)
def euler_gamma():
    """Euler-Mascheroni constant.

    ``H_n - log n - 1/(2n)`` corrected with the Bernoulli tail of the
    Euler-Maclaurin expansion; at n = 64 the next omitted term is below 1e-20.
    """
    n = 64
    harmonic = math.fsum(1.0 / k for k in range(1, n + 1))
    # B_2k / (2k), k = 1..5
    tail = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132)
    corr = math.fsum(c / n ** (2 * (k + 1)) for k, c in enumerate(tail))
    return harmonic - math.log(n) - 1.0 / (2 * n) + corr


# -- limit laws ------------------------------------------------------------


@dataclass(frozen=True)
class GumbelLaw:
    """Gumbel law of ``location + scale * G`` with G standard Gumbel."""

    location: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("Gumbel scale must be positive")

    def _z(self, x):
        return (np.asarray(x, dtype=float) - self.location) / self.scale

    def density(self, x):
        z = self._z(x)
        return np.exp(-z - np.exp(-z)) / self.scale

    def cdf(self, x):
        return np.exp(-np.exp(-self._z(x)))

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if np.any((q <= 0) | (q >= 1)):
            raise DomainError("quantile argument must lie in (0, 1)")
        return self.location - self.scale * np.log(-np.log(q))

    def sample(self, size, rng):
        """Quantile-transform sampling; ``rng`` is a numpy Generator."""
        u = rng.random(size)
        # random() is on [0, 1); 0 maps to -inf, redraw-free guard
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
        return self.location - self.scale * np.log(-np.log(u))

    @property
    def mean(self):
        return self.location + self.scale * euler_gamma()

    @property
    def variance(self):
        return self.scale**2 * math.pi**2 / 6

    @staticmethod
    def standard_laplace(s):
        """``E exp(-s G)`` for the standard law: ``Gamma(1 + s)`` for ``s > -1``."""
        return gamma_fn(1.0 + s) if s > -1 else math.inf


@dataclass(frozen=True)
class TildeGLaw:
    """The law arising when the process starts exactly on the saddle.

    Its transform ``2**(s/2) Gamma((1+s)/2) / sqrt(pi)`` is ``E|N|**s`` for a
    standard normal N, so the variable is ``-log|N|``.
    """

    @staticmethod
    def laplace(s):
        if s <= -1:
            return math.inf
        return 2.0 ** (s / 2) / math.sqrt(math.pi) * gamma_fn((1.0 + s) / 2)

    @staticmethod
    def cdf(x):
        return special.erfc(np.exp(-np.asarray(x, dtype=float)) / math.sqrt(2.0))

    @staticmethod
    def sample(size, rng):
        return -np.log(np.abs(rng.standard_normal(size)))

    @property
    def mean(self):
        # -d/ds log E exp(-s G~) at 0 = -(log 2)/2 - digamma(1/2)/2 = (gamma + log 2)/2
        return 0.5 * (euler_gamma() + math.log(2.0))

    @property
    def variance(self):
        # trigamma(1/2) / 4
        return math.pi**2 / 8


@dataclass(frozen=True)
class InverseGaussianLaw:
    """Inverse Gaussian with mean ``m`` and shape ``l``."""

    m: float
    l: float

    def __post_init__(self):
        if not (self.m > 0 and self.l > 0):
            raise DomainError("inverse Gaussian parameters must be positive")

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        out[pos] = np.sqrt(self.l / (2 * np.pi)) * xp**-1.5 * np.exp(
            -self.l * (xp - self.m) ** 2 / (2 * self.m**2 * xp)
        )
        return out

    def laplace(self, s):
        return math.exp(self.l / self.m * (1 - math.sqrt(1 + 2 * self.m**2 * s / self.l)))


# -- parabolic cylinder functions -----------------------------------------

_PCF_RTOL = 1e-13


def _pcf_integral(nu, y):
    """``log int_0^inf t^(nu-1) exp(-(t+y)^2/2) dt`` (y < 0) or with the e^{-y^2/2} factor removed (y >= 0)."""
    if y >= 0:
        def f(t):
            return math.exp(-0.5 * t * t - y * t)

        t_cut = 40.0
        peak = 0.0
    else:
        c = -y

        def f(t):
            return math.exp(-0.5 * (t - c) ** 2)

        peak = c
        t_cut = c + 40.0
    total = 0.0
    err_total = 0.0
    # (0, 1]: algebraic endpoint weight t^(nu-1)
    if nu != 1.0:
        val, err = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(nu - 1.0, 0.0),
                                  epsabs=0.0, epsrel=_PCF_RTOL, limit=200)
    else:
        val, err = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=_PCF_RTOL, limit=200)
    total += val
    err_total += err
    points = [peak] if 1.0 < peak < t_cut else None

    def g(t):
        return t ** (nu - 1.0) * f(t)

    val, err = integrate.quad(g, 1.0, t_cut, points=points, epsabs=0.0, epsrel=_PCF_RTOL, limit=400)
    total += val
    err_total += err
    if not total > 0 or err_total > 1e-10 * total:
        raise QuadratureFailure(f"parabolic cylinder quadrature failed at nu={nu}, y={y}")
    return math.log(total)


def log_phi(nu, y):
    """``log phi_nu(y)`` with ``phi_nu(y) = exp(-y^2/4) D_{-nu}(y)``.

    Uses ``phi_nu(y) = Gamma(nu)^-1 int_0^inf t^(nu-1) exp(-(t+y)^2/2) dt``,
    evaluated so that neither the huge values at ``y << 0`` nor the tiny ones
    at ``y >> 0`` overflow.
    """
    if not nu > 0:
        raise DomainError("nu must be positive")
    y = float(y)
    val = _pcf_integral(nu, y) - log_gamma_fn(nu)
    if y >= 0:
        val -= 0.5 * y * y
    return val


def phi_nu(nu, y):
    return math.exp(log_phi(nu, y))


def parabolic_cylinder_D(nu, x):
    """``D_{-nu}(x)`` for ``nu > 0``."""
    return math.exp(log_phi(nu, x) + 0.25 * x * x)


def _log1mexp(d):
    """``log(1 - exp(d))`` for ``d < 0``."""
    if d > -0.6931471805599453:
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


_CANCEL_FLOOR = 1e-7


def _log_v(nu, y, be):
    """log of the Eq.-(17)-type solution v(y) on (-be, be)."""
    lp_mb = log_phi(nu, -be)
    lp_b = log_phi(nu, be)
    lp_my = log_phi(nu, -y)
    lp_y = log_phi(nu, y)
    d_num = lp_b + lp_y - lp_mb - lp_my
    d_den = 2.0 * (lp_b - lp_mb)
    if -d_num < _CANCEL_FLOOR or -d_den < _CANCEL_FLOOR:
        raise PrecisionLoss("numerator and denominator of the cylinder-function ratio cancel")
    log_num = lp_mb + lp_my + _log1mexp(d_num)
    log_den = 2.0 * lp_mb + _log1mexp(d_den)
    return log_num - log_den


def ou_laplace_exact(b, x, epsilon, s):
    """Exact conditioned exit-time transform of ``dY = sqrt(2 eps) dB + Y dt`` on (-b, b).

    Returns ``E_x[exp(-s T_b) | T_b < T_{-b}]`` for ``s > -1``.
    """
    if not b > 0 or not -b < x < b:
        raise DomainError("need b > 0 and x in (-b, b)")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if not s > -1:
        raise DomainError("the transform is finite only for s > -1")
    if s == 0:
        return 1.0
    root = math.sqrt(epsilon)
    be, y = b / root, x / root
    return math.exp(_log_v(s + 1.0, y, be) - _log_v(1.0, y, be))


def _ou_asymptotic_unit(b, x, epsilon, s):
    if x < 0:
        log_val = log_gamma_fn(1 + s) + s * math.log(epsilon / (abs(x) * b))
        return math.exp(log_val) if log_val < 709.0 else math.inf
    if x == 0:
        return TildeGLaw.laplace(s) * (math.sqrt(epsilon) / b) ** s
    return (x / b) ** s


def ou_laplace_asymptotic(b, x, epsilon, s, alpha=1.0):
    """Small-temperature equivalent of the OU conditioned exit transform.

    General curvature is reduced to ``alpha = 1`` with ``T -> alpha T`` and
    ``(x, b) -> sqrt(alpha) (x, b)``.
    """
    if not b > 0 or not -b < x < b:
        raise DomainError("need b > 0 and x in (-b, b)")
    if not s > -alpha:
        raise DomainError("the transform is finite only for s > -alpha")
    if s == 0:
        return 1.0
    r = math.sqrt(alpha)
    return _ou_asymptotic_unit(b * r, x * r, epsilon, s / alpha)


# -- Brownian motion with drift, flat landscape ----------------------------


def _log_sinh(z):
    return z + math.log1p(-math.exp(-2 * z)) - math.log(2.0)


def _sinh_ratio_log(p, q):
    """``log(sinh p / sinh q)`` for ``p, q > 0`` without overflow."""
    return _log_sinh(p) - _log_sinh(q)


def bm_drift_laplace(a, b, x, mu, s):
    """``E_x[exp(-s H) | W_H = b]`` for ``W_t = mu t + B_t`` exiting (a, b).

    ``x == a`` returns the limit ``x -> a``; ``mu = 0`` is the driftless limit.
    """
    if x == b:
        return 1.0
    if not a <= x < b:
        raise DomainError("need a <= x < b")
    if s < 0:
        raise DomainError("s must be non-negative")
    if s == 0:
        return 1.0
    m = abs(mu)
    k = math.sqrt(2 * s + mu * mu)
    L = b - a
    d = x - a
    # sinh(L m) / sinh(d m) -> L / d and sinh(L m) / m -> L as m -> 0
    if d == 0:
        drift_part = math.log(L) if m == 0 else _log_sinh(L * m) - math.log(m)
        return math.exp(drift_part + math.log(k) - _log_sinh(L * k))
    drift_part = math.log(L / d) if m == 0 else _sinh_ratio_log(L * m, d * m)
    return math.exp(drift_part + _sinh_ratio_log(d * k, L * k))


def flat_laplace(b, epsilon, s):
    """Transform of the reactive time across (-b, b) for ``X = sqrt(2 eps) B``."""
    if not (b > 0 and epsilon > 0) or s < 0:
        raise DomainError("need b, epsilon > 0 and s >= 0")
    z = math.sqrt(4 * b * b * s / epsilon)
    if z < 1e-4:
        return 1.0 - z * z / 6 + 7 * z**4 / 360
    if z > 700:
        return math.exp(math.log(2 * z) - z - math.log1p(-math.exp(-2 * z)))
    return z / math.sinh(z)


def flat_moments(b, epsilon):
    """Exact ``(mean, variance)`` of the flat-landscape reactive time."""
    if not (b > 0 and epsilon > 0):
        raise DomainError("need b, epsilon > 0")
    return 2 * b * b / (3 * epsilon), 8 * b**4 / (45 * epsilon**2)


FLAT_Y_A = 6 * math.sqrt(5) / math.sqrt(2)
FLAT_Y_B = math.sqrt(5) / math.sqrt(2)


def flat_standardized_laplace(s):
    """``E exp(-s Y)`` of the standardized flat reactive time (mean 0, variance 1)."""
    As = FLAT_Y_A * s
    if As < 0:
        z = math.sqrt(-As)
        ratio = z / math.sin(z)
    elif As < 1e-8:
        ratio = 1.0 - As / 6
    else:
        z = math.sqrt(As)
        ratio = z / math.sinh(z)
    return ratio * math.exp(FLAT_Y_B * s)
