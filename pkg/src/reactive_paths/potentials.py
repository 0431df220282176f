"""Potential landscapes and their analytic by-products.

Five landscapes are supported::

    quartic        V(x) = x^4/4 - x^2/2           wells at -1, +1
    quadratic:a    V(x) = -a x^2 / 2              repulsive Ornstein-Uhlenbeck
    abs:b          V(x) = -b |x|                  Brownian motion with drift
    flat:b         V(x) = 0 on (-b, b)            driftless Brownian motion
    monomial:n     V(x) = -x^(2n+2) / (2n+2)      degenerate maximum

All have their local maximum at 0 with V(0) = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DegenerateMaximum, DomainError, QuadratureFailure, SignError

QUAD_TOL = 1e-10

KINDS = ("quartic", "quadratic", "abs", "flat", "monomial")
KERNEL_CODES = {kind: i for i, kind in enumerate(KINDS)}


@dataclass(frozen=True)
class Potential:
    """A one-dimensional landscape.

    ``param`` is the curvature for ``quadratic``, the slope for ``abs``, the
    half-width for ``flat`` and the integer degree ``n`` for ``monomial``; it
    is ignored for ``quartic``.
    """

    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if self.kind == "quartic":
            object.__setattr__(self, "param", 0.0)
        elif self.kind == "monomial":
            n = self.param
            if n != int(n) or n < 1:
                raise DomainError("monomial degree must be an integer >= 1")
            object.__setattr__(self, "param", float(int(n)))
        elif not self.param > 0:
            raise DomainError(f"{self.kind} parameter must be positive")

    # -- constructors -----------------------------------------------------

    @classmethod
    def quartic(cls):
        return cls("quartic")

    @classmethod
    def quadratic(cls, alpha=1.0):
        return cls("quadratic", float(alpha))

    @classmethod
    def abs_barrier(cls, beta=1.0):
        return cls("abs", float(beta))

    @classmethod
    def flat(cls, b=1.0):
        return cls("flat", float(b))

    @classmethod
    def monomial(cls, n=1):
        return cls("monomial", n)

    @classmethod
    def from_tag(cls, tag):
        """Parse ``"quartic"``, ``"quadratic:2.5"``, ``"abs:1"``, ``"flat:1"``, ``"monomial:1"``."""
        name, _, arg = str(tag).strip().partition(":")
        if name == "quartic":
            if arg:
                raise DomainError("quartic takes no parameter")
            return cls.quartic()
        if name not in KINDS:
            raise DomainError(f"unknown potential tag {tag!r}")
        if not arg:
            raise DomainError(f"potential tag {tag!r} needs a parameter")
        try:
            value = float(arg)
        except ValueError:
            raise DomainError(f"bad parameter in potential tag {tag!r}") from None
        return cls(name, value)

    @property
    def tag(self):
        if self.kind == "quartic":
            return "quartic"
        if self.kind == "monomial":
            return f"monomial:{int(self.param)}"
        return f"{self.kind}:{self.param:g}"

    @property
    def kernel_code(self):
        return KERNEL_CODES[self.kind]

    @property
    def degree(self):
        """``n`` for the monomial landscape."""
        if self.kind != "monomial":
            raise DomainError("degree is only defined for monomial potentials")
        return int(self.param)

    # -- evaluators -------------------------------------------------------

    def V(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.param
        if k == "quartic":
            return x**4 / 4 - x**2 / 2
        if k == "quadratic":
            return -p * x**2 / 2
        if k == "abs":
            return -p * np.abs(x)
        if k == "flat":
            return np.zeros_like(x)
        m = 2 * int(p) + 2
        return -(x**m) / m

    def dV(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.param
        if k == "quartic":
            return x**3 - x
        if k == "quadratic":
            return -p * x
        if k == "abs":
            return -p * np.sign(x)
        if k == "flat":
            return np.zeros_like(x)
        return -(x ** (2 * int(p) + 1))

    def d2V(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.param
        if k == "quartic":
            return 3 * x**2 - 1
        if k == "quadratic":
            return np.full_like(x, -p)
        if k in ("abs", "flat"):
            return np.zeros_like(x)
        n = int(p)
        return -(2 * n + 1) * x ** (2 * n)

    # -- landmarks --------------------------------------------------------

    @property
    def wells(self):
        """``(x*, y*)``; infinite when the landscape has no wells."""
        if self.kind == "quartic":
            return -1.0, 1.0
        if self.kind == "flat":
            return -self.param, self.param
        return -math.inf, math.inf

    @property
    def x_star(self):
        return self.wells[0]

    @property
    def y_star(self):
        return self.wells[1]

    @property
    def satisfies_assumption(self):
        """Smooth double well with a non-degenerate maximum at 0."""
        return self.kind in ("quartic", "quadratic")

    @property
    def taylor_constants(self):
        """Stored ``(K, delta)`` with ``|V'(x) + alpha x| <= K x^2`` on ``|x| < delta``."""
        if self.kind == "quartic":
            return 3.0, 0.3
        if self.kind == "quadratic":
            return 1.0, 1.0
        raise DegenerateMaximum(f"{self.tag} has no quadratic Taylor bound at 0")

    def max_on(self, a, b):
        """Maximum of V on [a, b]; every landscape here peaks at 0."""
        vals = [float(self.V(a)), float(self.V(b))]
        if a < 0 < b:
            vals.append(float(self.V(0.0)))
        return max(vals)


def curvature_alpha(p):
    """``alpha = -V''(0)``; only for a non-degenerate maximum."""
    if not p.satisfies_assumption:
        raise DegenerateMaximum(f"{p.tag} has no non-degenerate maximum at 0")
    return float(-p.d2V(0.0))


def _third_derivative_at_zero(p, h=1e-4):
    return float((p.d2V(h) - p.d2V(-h)) / (2 * h))


def _quad(f, lo, hi, points=None, epsabs=QUAD_TOL, epsrel=0.0):
    val, err = integrate.quad(f, lo, hi, points=points, epsabs=epsabs, epsrel=epsrel, limit=400)
    if not err <= max(epsabs, epsrel * abs(val)) * 10:
        raise QuadratureFailure(f"quadrature error {err:.3g} above tolerance")
    return val


def correction_F(p, s):
    r"""Finite part :math:`\int_s^0 (\alpha/V'(t) + 1/t)\,dt` of the log-divergent travel time."""
    alpha = curvature_alpha(p)
    x_lo, x_hi = p.wells
    if not x_lo < s < x_hi:
        raise DomainError(f"s={s} outside ({x_lo}, {x_hi})")
    if s == 0:
        return 0.0
    if p.kind == "quadratic":
        return 0.0
    # removable singularity at 0: alpha/V' + 1/t -> -V'''(0) / (2 alpha)
    at_zero = -_third_derivative_at_zero(p) / (2 * alpha)

    def integrand(t):
        if abs(t) < 1e-6:
            return at_zero
        return alpha / float(p.dV(t)) + 1.0 / t

    return _quad(integrand, s, 0.0)


def deterministic_time(p, start, end):
    """Travel time of the noiseless flow ``x' = -V'(x)`` from ``start`` to ``end``."""
    if start == end:
        return 0.0
    lo, hi = min(start, end), max(start, end)
    x_lo, x_hi = p.wells
    if lo < 0 < hi or lo == 0 or hi == 0:
        raise DomainError("segment touches the saddle point 0")
    if lo <= x_lo or hi >= x_hi:
        raise DomainError("segment touches a well")
    if p.kind == "flat":
        raise DomainError("the flat landscape has no deterministic flow")
    mid = 0.5 * (start + end)
    if np.sign(end - start) != np.sign(-float(p.dV(mid))):
        raise DomainError("the flow -V' does not carry start to end")
    return _quad(lambda t: -1.0 / float(p.dV(t)), start, end)


def psi_quartic(x):
    """``log(x / sqrt(1 - x^2))``: an antiderivative of ``-1/V'`` for the quartic on (0, 1)."""
    x = np.asarray(x, dtype=float)
    return np.log(x / np.sqrt(1 - x**2))


def laplace_asymptotic(kind, phi_a, phi_deriv, psi_a, eps):
    """Leading Laplace-method term of ``int_a^b exp(phi/eps) psi dx``.

    ``kind="quadratic"`` for an interior-type maximum at ``a`` with
    ``phi''(a) = phi_deriv < 0``; ``kind="linear"`` for a boundary maximum with
    ``phi'(a) = phi_deriv < 0``.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if phi_deriv >= 0:
        raise SignError("phi'' (quadratic) or phi' (linear) must be negative")
    if kind == "quadratic":
        return math.sqrt(math.pi * eps / (2 * abs(phi_deriv))) * math.exp(phi_a / eps) * psi_a
    if kind == "linear":
        return eps / abs(phi_deriv) * math.exp(phi_a / eps) * psi_a
    raise DomainError(f"unknown kind {kind!r}")
