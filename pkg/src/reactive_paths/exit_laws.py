"""Exact conditioned-exit quantities on an interval (a, b).

For ``dX = -V'(X) dt + sqrt(2 eps) dB`` started at ``x``:

* ``exit_probability``  -- ``P_x(T_b < T_a)``, the committor ``u_0``;
* ``h_drift``           -- drift of the process conditioned on ``{T_b < T_a}``;
* ``laplace_bvp``       -- ``E_x[exp(-s H) | X_H = b]`` from the boundary-value
  problem ``eps u'' - V' u' = s u``, ``u(a) = 0``, ``u(b) = 1``.

Every exponential of ``V/eps`` is taken relative to a local maximum of V, so
nothing overflows for small temperatures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, IllConditioned, NoConvergence, QuadratureFailure
from .potentials import Potential

BVP_RTOL = 1e-7
BVP_MIN_LEVEL = 10
BVP_MAX_LEVEL = 20


@dataclass(frozen=True)
class ExitProblem:
    potential: Potential
    a: float
    b: float
    x: float
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not self.a < self.x < self.b:
            raise DomainError(f"need a < x < b, got a={self.a}, x={self.x}, b={self.b}")
        if self.potential.satisfies_assumption:
            x_lo, x_hi = self.potential.wells
            if not (x_lo < self.a and self.b < x_hi):
                raise DomainError("interval must lie strictly between the wells")

    def with_start(self, x):
        return ExitProblem(self.potential, self.a, self.b, x, self.epsilon)

    def with_interval(self, a, b):
        return ExitProblem(self.potential, a, b, self.x, self.epsilon)

    def to_dict(self):
        return {"potential": self.potential.tag, "a": self.a, "b": self.b,
                "x": self.x, "epsilon": self.epsilon}


@dataclass(frozen=True)
class LaplaceEvaluation:
    s: float
    value: float
    solver_grid_size: int
    residual: float

    def to_dict(self):
        return {"s": self.s, "value": self.value, "grid": self.solver_grid_size,
                "residual": self.residual}


# -- log-domain quadrature -------------------------------------------------


def _breakpoints(lo, hi, centres, width):
    pts = set()
    for c in centres:
        for k in (0.0, 1.0, 4.0, 16.0):
            for sgn in (-1.0, 1.0):
                p = c + sgn * k * width
                if lo < p < hi:
                    pts.add(p)
    return sorted(pts) or None


def log_integral_exp(potential, eps, lo, hi, sign=1.0):
    """``log int_lo^hi exp(sign * V(s) / eps) ds``."""
    if not hi > lo:
        raise DomainError("empty integration range")
    V = potential.V
    if sign > 0:
        M = potential.max_on(lo, hi)
    else:
        grid = np.linspace(lo, hi, 257)
        M = float(np.max(-V(grid)))
    width = max(math.sqrt(eps), 1e-3 * (hi - lo)) if eps < 1 else (hi - lo)
    pts = _breakpoints(lo, hi, [lo, 0.0, hi], min(width, eps / 0.05))

    def f(t):
        return math.exp((sign * float(V(t)) - M) / eps)

    val, err = integrate.quad(f, lo, hi, points=pts, epsabs=0.0, epsrel=1e-12, limit=500)
    if not val > 0 or err > 1e-9 * val:
        raise QuadratureFailure(f"log-domain integral failed on [{lo}, {hi}]")
    return M / eps + math.log(val)


def log_exit_probability(prob):
    p, e = prob.potential, prob.epsilon
    return log_integral_exp(p, e, prob.a, prob.x) - log_integral_exp(p, e, prob.a, prob.b)


def exit_probability(prob):
    """Committor ``P_x(T_b < T_a)``."""
    return math.exp(log_exit_probability(prob))


def h_drift(prob, at):
    """Drift of the process conditioned to leave (a, b) through b."""
    if not prob.a < at < prob.b:
        raise DomainError("h_drift is defined on the open interval (a, b)")
    p, e = prob.potential, prob.epsilon
    log_ratio = float(p.V(at)) / e - log_integral_exp(p, e, prob.a, at)
    return float(-p.dV(at)) + 2 * e * math.exp(log_ratio)


def laplace_exit_probability(prob):
    """Leading Laplace-method estimate of the committor for ``x < 0 < b``."""
    from .potentials import curvature_alpha, laplace_asymptotic

    p, e, x = prob.potential, prob.epsilon, prob.x
    if not (prob.a < x < 0 < prob.b):
        raise DomainError("estimate needs a < x < 0 < b")
    alpha = curvature_alpha(p)
    num = laplace_asymptotic("linear", float(p.V(x)), -float(p.dV(x)), 1.0, e)
    den = 2 * laplace_asymptotic("quadratic", 0.0, -alpha, 1.0, e)
    return num / den


# -- exponentially fitted boundary-value solver ----------------------------


def _inv_exprel(d):
    """``d / (exp(d) - 1)`` evaluated stably for any real d."""
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    small = np.abs(d) < 700
    out[small] = 1.0 / special.exprel(d[small])
    big = ~small
    db = d[big]
    out[big] = np.where(db > 0, db * np.exp(-np.abs(db)), -db)
    return out


def _exprel(d):
    d = np.asarray(d, dtype=float)
    return special.exprel(np.minimum(d, 700.0))


def _density_cdf(x, lo, centres, ell, amp):
    x = np.asarray(x, dtype=float)
    out = x - lo
    c = ell * math.sqrt(math.pi) / 2 * amp
    for m in centres:
        out = out + c * (special.erf((x - m) / ell) - special.erf((lo - m) / ell))
    return out


def _density(x, centres, ell, amp):
    out = np.ones_like(x)
    for m in centres:
        out = out + amp * np.exp(-(((x - m) / ell) ** 2))
    return out


def _mapped_nodes(lo, hi, n, centres, ell, amp):
    """``n + 1`` nodes on [lo, hi] equidistributing the clustering density."""
    total = _density_cdf(hi, lo, centres, ell, amp)
    target = np.linspace(0.0, 1.0, n + 1) * total
    x = lo + (hi - lo) * target / total
    for _ in range(60):
        step = (_density_cdf(x, lo, centres, ell, amp) - target) / _density(x, centres, ell, amp)
        x = np.clip(x - step, lo, hi)
        if np.max(np.abs(step)) < 1e-15 * (hi - lo):
            break
    x[0], x[-1] = lo, hi
    return x


class _Grid:
    """Clustered grid on [a, b] with the evaluation point as a node."""

    def __init__(self, prob, at):
        a, b, eps = prob.a, prob.b, prob.epsilon
        self.a, self.b, self.at = a, b, at
        self.centres = [c for c in (a, 0.0, b) if a <= c <= b]
        self.ell = min(3 * math.sqrt(eps), (b - a) / 4)
        self.amp = 4.0
        base = 1 << BVP_MIN_LEVEL
        if a < at < b:
            frac = float(_density_cdf(at, a, self.centres, self.ell, self.amp)
                         / _density_cdf(b, a, self.centres, self.ell, self.amp))
            self.left0 = int(min(max(round(base * frac), 4), base - 4))
        else:
            self.left0 = None

    def nodes(self, level):
        n = 1 << level
        if self.left0 is None:
            return _mapped_nodes(self.a, self.b, n, self.centres, self.ell, self.amp), None
        left = self.left0 << (level - BVP_MIN_LEVEL)
        xl = _mapped_nodes(self.a, self.at, left, self.centres, self.ell, self.amp)
        xr = _mapped_nodes(self.at, self.b, n - left, self.centres, self.ell, self.amp)
        return np.concatenate([xl, xr[1:]]), left


def _fitted_coefficients(potential, eps, xs):
    """Edge conductances and cell masses of the exponentially fitted scheme.

    Rows are scaled by ``exp(V_i / eps)``, so only differences of ``V / eps``
    between neighbouring nodes enter and nothing overflows.
    """
    v = potential.V(xs) / eps
    h = np.diff(xs)
    d = np.diff(v)
    c_right = eps * _inv_exprel(d) / h
    c_left = eps * _inv_exprel(-d) / h
    mass = 0.5 * h[1:] * _exprel(-d[1:] / 2) + 0.5 * h[:-1] * _exprel(d[:-1] / 2)
    # row i (interior node i = 1..N-1) couples to i-1 with cl and to i+1 with cr
    return c_left[:-1], c_right[1:], mass, float(np.max(np.abs(d)))


def _log_ratio(cl, cr, mass, s, k):
    """``log(u_s / u_0)`` at interior node ``k`` (1-based) via the ratio sweep.

    With ``u_{i-1} = r_{i-1} u_i`` and ``u_0 = 0`` the recursion
    ``r_i = cr_i / (cl_i (1 - r_{i-1}) + cr_i + s m_i)`` involves positive terms
    only, and ``log u_k = sum_{j >= k} log r_j``; the ``cr`` factors cancel in
    the ratio of the two transforms.
    """
    from .kernels import backend

    log_den_s = backend.ratio_sweep(cl, cr, mass, float(s))
    log_den_0 = backend.ratio_sweep(cl, cr, mass, 0.0)
    j = k - 1
    log_u0 = float(np.sum(np.log(cr[j:]) - log_den_0[j:]))
    return float(np.sum(log_den_0[j:] - log_den_s[j:])), log_u0


def laplace_bvp(prob, s, at=None):
    """Conditioned exit-time Laplace transform ``F(s, at) = u_s(at) / u_0(at)``.

    ``at`` defaults to ``prob.x``; ``at == prob.a`` returns the limit from the
    right.  The grid is doubled from ``2**10`` intervals until two successive
    values agree to ``1e-7`` relative.
    """
    at = prob.x if at is None else float(at)
    if not prob.a <= at <= prob.b:
        raise DomainError("evaluation point outside [a, b]")
    if s == 0 or at == prob.b:
        return LaplaceEvaluation(float(s), 1.0, 0, 0.0)
    grid = _Grid(prob, at)
    prev = None
    for level in range(BVP_MIN_LEVEL, BVP_MAX_LEVEL + 1):
        xs, k = grid.nodes(level)
        cl, cr, mass, peclet = _fitted_coefficients(prob.potential, prob.epsilon, xs)
        log_f, _ = _log_ratio(cl, cr, mass, s, 1 if k is None else k)
        value = math.exp(log_f)
        if prev is not None:
            rel = abs(value - prev) / max(abs(value), 1e-300)
            if rel < BVP_RTOL:
                return LaplaceEvaluation(float(s), value, len(xs), rel)
        prev = value
    if peclet > 1.0:
        raise IllConditioned(f"cell Peclet number {peclet:.3g} above 1 at the finest grid")
    raise NoConvergence(f"laplace_bvp did not converge by 2**{BVP_MAX_LEVEL} intervals")


def conditioned_mean_bvp(prob, h=1e-4):
    """``-(F(h) - 1) / h``: finite-difference mean of the conditioned exit time."""
    return (1.0 - laplace_bvp(prob, h).value) / h


# -- drift table for the conditioned sampler -------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class DriftTable:
    """Uniform table of a log drift correction.

    The sampler evaluates the correction ``c(x)`` by linear interpolation of
    ``values`` on ``lo + i * step``; when ``singular_at`` is set the table holds
    ``log((x - singular_at) c(x))`` and ``c`` is recovered by dividing by the
    distance to the singular point.
    """

    lo: float
    step: float
    values: np.ndarray
    singular_at: float | None = None

    @property
    def hi(self):
        return self.lo + self.step * (len(self.values) - 1)

    def correction(self, x):
        x = np.asarray(x, dtype=float)
        n = len(self.values)
        pos = (x - self.lo) / self.step
        i = np.clip(np.floor(pos).astype(np.int64), 0, n - 2)
        w = pos - i
        val = (1 - w) * self.values[i] + w * self.values[i + 1]
        out = np.exp(val)
        if self.singular_at is not None:
            out = out / (x - self.singular_at)
        return out


def htransform_table(prob, n=None):
    """Tabulate ``exp(V(x)/eps) / int_a^x exp(V/eps)`` on [a, b]."""
    a, b, eps, p = prob.a, prob.b, prob.epsilon, prob.potential
    if n is None:
        n = int(min(max((b - a) / (0.02 * math.sqrt(eps)), 1 << 12), 1 << 20))
    xs = np.linspace(a, b, n + 1)
    h = xs[1] - xs[0]
    M = p.max_on(a, b)
    # per-cell Gauss-Legendre in log domain
    t = 0.5 * (xs[:-1, None] + xs[1:, None]) + 0.5 * h * _GL_NODES[None, :]
    logf = (p.V(t) - M) / eps + np.log(0.5 * h * _GL_WEIGHTS)[None, :]
    log_cells = special.logsumexp(logf, axis=1)
    log_I = np.logaddexp.accumulate(log_cells)
    rho = np.empty(n + 1)
    rho[0] = 0.0
    rho[1:] = np.log(xs[1:] - a) + (p.V(xs[1:]) - M) / eps - log_I
    return DriftTable(a, h, rho, singular_at=a)
