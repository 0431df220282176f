"""Small-temperature limit laws of reactive durations.

Each constructor returns a :class:`LimitLaw`, a value object describing the
approximate law of a duration at a given temperature:

=================  =====================================================
ShiftedGumbel      ``location + scale * G``, G standard Gumbel
TildeG             ``location + scale * (-log|N|)``, start on the saddle
Deterministic      point mass at ``location``
Gaussian           ``Normal(location, scale**2)``
FlatLaw            exact law of the driftless case, diverging like 1/eps
MonomialScaling    scaling exponents only, with a bound on the mean
=================  =====================================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import special_laws as sl
from .errors import DegenerateMaximum, DomainError, QuadratureFailure
from .exit_laws import DriftTable
from .potentials import Potential, correction_F, curvature_alpha

KINDS = ("ShiftedGumbel", "TildeG", "Deterministic", "Gaussian", "FlatLaw", "MonomialScaling")


@dataclass(frozen=True)
class LimitLaw:
    kind: str
    location: float
    scale: float
    epsilon_power: float
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown limit law kind {self.kind!r}")
        if not -1.0 <= self.epsilon_power <= 0.0:
            raise DomainError("epsilon_power must lie in [-1, 0]")
        if self.kind != "Deterministic" and not self.scale > 0:
            raise DomainError("scale must be positive")

    @property
    def mean(self):
        k = self.kind
        if k == "ShiftedGumbel":
            return self.location + self.scale * sl.euler_gamma()
        if k == "TildeG":
            return self.location + self.scale * sl.TildeGLaw().mean
        if k == "MonomialScaling":
            return self.parameters["mean_bound"] * self.parameters["t_eps"]
        return self.location

    @property
    def variance(self):
        k = self.kind
        if k == "ShiftedGumbel":
            return self.scale**2 * math.pi**2 / 6
        if k == "TildeG":
            return self.scale**2 * sl.TildeGLaw().variance
        if k == "Deterministic":
            return 0.0
        if k in ("Gaussian", "FlatLaw"):
            return self.scale**2
        raise DomainError("the monomial limit law is not identified")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        z = (t - self.location) / self.scale if self.scale > 0 else None
        k = self.kind
        if k == "ShiftedGumbel":
            return np.exp(-np.exp(-z))
        if k == "TildeG":
            return sl.TildeGLaw.cdf(z)
        if k == "Deterministic":
            return (t >= self.location).astype(float)
        if k == "Gaussian":
            return 0.5 * special.erfc(-z / math.sqrt(2.0))
        raise DomainError(f"no closed-form CDF for {k}")

    def laplace(self, s):
        """``E exp(-s T)`` of the limit variable."""
        k = self.kind
        if k == "ShiftedGumbel":
            return math.exp(-s * self.location) * sl.gamma_fn(1 + s * self.scale)
        if k == "TildeG":
            return math.exp(-s * self.location) * sl.TildeGLaw.laplace(s * self.scale)
        if k == "Deterministic":
            return math.exp(-s * self.location)
        if k == "Gaussian":
            return math.exp(-s * self.location + 0.5 * (s * self.scale) ** 2)
        if k == "FlatLaw":
            p = self.parameters
            return sl.flat_laplace(p["b"], p["epsilon"], s)
        raise DomainError("the monomial limit law is not identified")

    def to_dict(self):
        out = {"kind": self.kind, "location": self.location, "scale": self.scale,
               "epsilon_power": self.epsilon_power, "parameters": dict(self.parameters)}
        if self.kind != "MonomialScaling":
            out["mean"] = self.mean
            out["variance"] = self.variance
        return out


def _gumbel(alpha, log_gap, epsilon, **params):
    # log_gap collects every epsilon-free term of the shift
    loc = (-math.log(epsilon) + log_gap + math.log(alpha)) / alpha
    return LimitLaw("ShiftedGumbel", loc, 1.0 / alpha, 0.0,
                    dict(alpha=alpha, epsilon=epsilon, **params))


def theorem_1_4_law(p: Potential, x, B, epsilon):
    """Shifted Gumbel law of the time from ``x < 0`` to ``B > 0`` through the saddle.

    ``location = (-log eps + log(|x| B) + F(x) + F(B) + log alpha) / alpha``
    and ``scale = 1 / alpha``.
    """
    alpha = curvature_alpha(p)
    x_lo, x_hi = p.wells
    if not x_lo < x < 0:
        raise DomainError("x must lie between the left well and the saddle")
    if not 0 < B < x_hi:
        raise DomainError("B must lie between the saddle and the right well")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    F_x, F_B = correction_F(p, x), correction_F(p, B)
    return _gumbel(alpha, math.log(abs(x) * B) + F_x + F_B, epsilon,
                   potential=p.tag, x=x, B=B, F_x=F_x, F_B=F_B)


def theorem_3_3_law(alpha, x, b, epsilon):
    """Limit law of the conditioned exit time of (-b, b) for ``V = -alpha x^2 / 2``."""
    if not (alpha > 0 and b > 0 and epsilon > 0):
        raise DomainError("alpha, b and epsilon must be positive")
    if not -b < x < b:
        raise DomainError("x must lie in (-b, b)")
    if x < 0:
        return _gumbel(alpha, math.log(abs(x) * b), epsilon, x=x, b=b)
    if x == 0:
        loc = (-0.5 * math.log(epsilon) + math.log(b) + 0.5 * math.log(alpha)) / alpha
        return LimitLaw("TildeG", loc, 1.0 / alpha, 0.0,
                        dict(alpha=alpha, epsilon=epsilon, x=x, b=b))
    return LimitLaw("Deterministic", (math.log(b) - math.log(x)) / alpha, 0.0, 0.0,
                    dict(alpha=alpha, epsilon=epsilon, x=x, b=b))


def bm_drift_limit(beta_slope, delta, epsilon):
    """Gaussian approximation of the exit time of (-delta, 0) for ``V = -beta |x|``.

    ``H -> delta / beta`` and ``(H - delta/beta) / sqrt(eps) -> N(0, 2 delta / beta^3)``.
    """
    if not (beta_slope > 0 and delta > 0 and epsilon > 0):
        raise DomainError("beta, delta and epsilon must be positive")
    coef = 2 * delta / beta_slope**3
    return LimitLaw("Gaussian", delta / beta_slope, math.sqrt(coef * epsilon), 0.0,
                    dict(beta=beta_slope, delta=delta, epsilon=epsilon,
                         variance_coefficient=coef, reactive_limit=2 * delta / beta_slope))


def flat_limit(b, epsilon):
    """Exact law of the conditioned exit time of (-b, b) for driftless motion."""
    mean, var = sl.flat_moments(b, epsilon)
    return LimitLaw("FlatLaw", mean, math.sqrt(var), -1.0,
                    dict(b=b, epsilon=epsilon, y_a=sl.FLAT_Y_A, y_b=sl.FLAT_Y_B))


# -- degenerate maximum ------------------------------------------------------

MEAN_CUTOFF = 8.0


def _tail_R(n, y):
    """``int_0^inf exp(V(y+u) - V(y)) du`` for ``V = -z^(2n+2)/(2n+2)``, ``y >= 0``."""
    m = 2 * n + 2
    if y == 0:
        def f(u):
            return math.exp(-(u**m) / m)
        upper = (745.0 * m) ** (1.0 / m)
    else:
        ym = y**m / m

        # (y+u)^m - y^m without cancelling two large powers
        def f(u):
            return math.exp(-ym * math.expm1(m * math.log1p(u / y)))
        # the exponent reaches -745 here
        upper = y * math.expm1(math.log1p(745.0 / ym) / m)
    val, err = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=1e-12, limit=200)
    if err > 1e-9 * val:
        raise QuadratureFailure("tail integral of the monomial landscape")
    return val


def _half_mass(n):
    m = 2 * n + 2
    return math.gamma(1.0 / m) * m ** (1.0 / m - 1.0)  # int_0^inf exp(-z^m/m) dz


def monomial_log_correction(n, z):
    """``log(exp(V(z)) / int_{-inf}^z exp(V))`` for the monomial landscape."""
    m = 2 * n + 2
    C = 2 * _half_mass(n)
    if z < 0:
        return -math.log(_tail_R(n, -z))
    V = -(z**m) / m
    return V - math.log(C - math.exp(V) * _tail_R(n, z))


def monomial_mean_bound(n, cutoff=MEAN_CUTOFF):
    """Mean explosion time from ``-inf`` of the rescaled degenerate-saddle process.

    With ``L(y) = int_{-inf}^y e^V`` and ``C = L(inf)`` the Green kernel
    ``(p(inf) - p(y)) m(y)`` reduces to ``e^{-V(y)} L(y) (C - L(y)) / C``,
    symmetric in y, which integrates to ``2 int_0^inf R(y) L(y) / C dy`` with
    ``R(y) = e^{-V(y)} (C - L(y))``.  Beyond ``cutoff`` the two-term tail
    ``Y^{-2n}/(2n) - Y^{-(4n+2)}/2`` is added.
    """
    if n != int(n) or n < 1:
        raise DomainError("n must be an integer >= 1")
    n = int(n)
    m = 2 * n + 2
    C = 2 * _half_mass(n)

    def L_over_C(y):
        inner, _ = integrate.quad(lambda s: math.exp(-(s**m) / m), 0.0, y, epsabs=0.0,
                                  epsrel=1e-13)
        return 0.5 + inner / C

    val, err = integrate.quad(lambda y: _tail_R(n, y) * L_over_C(y), 0.0, cutoff,
                              epsabs=1e-11, epsrel=1e-11, limit=200)
    if err > 1e-8:
        raise QuadratureFailure("monomial mean bound")
    tail = cutoff ** (-2 * n) / (2 * n) - cutoff ** (-(4 * n + 2)) / 2
    return 2 * (val + tail)


def monomial_drift_table(n, lo=-12.0, hi=12.0, cells=4800):
    """Drift correction table of the rescaled process for the tabulated sampler."""
    xs = np.linspace(lo, hi, cells + 1)
    vals = np.array([monomial_log_correction(n, float(z)) for z in xs])
    return DriftTable(lo, xs[1] - xs[0], vals, singular_at=None)


def monomial_limit(n, epsilon):
    """Time scale ``eps^{-n/(n+1)}`` and space scale ``eps^{1/(2n+2)}`` of the degenerate case."""
    if n != int(n) or n < 1:
        raise DomainError("n must be an integer >= 1")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    n = int(n)
    power = -n / (n + 1)
    t_eps = epsilon**power
    a_eps = epsilon ** (1.0 / (2 * n + 2))
    bound = monomial_mean_bound(n)
    return LimitLaw("MonomialScaling", bound * t_eps, t_eps, power,
                    dict(n=n, epsilon=epsilon, t_eps=t_eps, a_eps=a_eps, mean_bound=bound))


# -- transition rate -----------------------------------------------------------


def eyring_kramers_mean(p: Potential, epsilon):
    """Eyring-Kramers mean transition time from the left well over the saddle."""
    if not p.satisfies_assumption:
        raise DegenerateMaximum(f"{p.tag} has no non-degenerate saddle")
    x_star = p.x_star
    if not math.isfinite(x_star):
        raise DomainError(f"{p.tag} has no well")
    curv_well = float(p.d2V(x_star))
    curv_top = abs(float(p.d2V(0.0)))
    if not curv_well > 0:
        raise DegenerateMaximum("the well is degenerate")
    barrier = float(p.V(0.0) - p.V(x_star))
    return 2 * math.pi / math.sqrt(curv_well * curv_top) * math.exp(barrier / epsilon)


saddle_crossing_law = theorem_1_4_law
quadratic_barrier_law = theorem_3_3_law
LAW_NAMES = ("saddle", "quadratic", "bm-drift", "flat", "monomial")


def law_from_spec(name, **kw):
    """Build a law by name for the command line."""
    if name in ("saddle", "gumbel"):
        return theorem_1_4_law(Potential.from_tag(kw.get("potential", "quartic")), kw["x"],
                               kw["B"], kw["epsilon"])
    if name in ("quadratic", "ou"):
        return theorem_3_3_law(kw.get("alpha", 1.0), kw["x"], kw["b"], kw["epsilon"])
    if name in ("bm-drift", "gaussian"):
        return bm_drift_limit(kw["beta"], kw["delta"], kw["epsilon"])
    if name == "flat":
        return flat_limit(kw["b"], kw["epsilon"])
    if name == "monomial":
        return monomial_limit(kw["n"], kw["epsilon"])
    raise DomainError(f"unknown law {name!r}")
