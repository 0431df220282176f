"""Empirical distributions and the comparisons run against exact laws."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

from .errors import DomainError, TooFewSamples
from .rng import as_stream
from .special_laws import euler_gamma

__all__ = ["EmpiricalDistribution", "ks_distance", "ks_two_sample", "bootstrap_mean_ci",
           "bootstrap_mean_se", "histogram_density", "t_mean_ci", "euler_gamma", "mean_se"]


@dataclass(frozen=True)
class EmpiricalDistribution:
    sorted_values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.sorted_values, dtype=float).ravel())
        if v.size < 1:
            raise TooFewSamples("an empirical distribution needs at least one value")
        object.__setattr__(self, "sorted_values", v)

    @classmethod
    def of(cls, values):
        return cls(np.asarray(values, dtype=float))

    @property
    def n(self):
        return self.sorted_values.size

    @property
    def mean(self):
        return float(np.mean(self.sorted_values))

    def cdf(self, x):
        return np.searchsorted(self.sorted_values, x, side="right") / self.n


def _as_dist(e):
    return e if isinstance(e, EmpiricalDistribution) else EmpiricalDistribution.of(e)


def ks_distance(e, cdf):
    """``sup |F_n - F|`` checked on both sides of every order statistic."""
    e = _as_dist(e)
    F = np.asarray(cdf(e.sorted_values), dtype=float)
    i = np.arange(1, e.n + 1)
    return float(max(np.max(i / e.n - F), np.max(F - (i - 1) / e.n), 0.0))


def ks_two_sample(x, y):
    """Two-sample Kolmogorov-Smirnov distance."""
    return float(_sps.ks_2samp(np.asarray(x, float), np.asarray(y, float)).statistic)


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def _boot_means(values, resamples, rng, chunk=64):
    gen = as_stream(rng).generator()
    n = values.size
    out = np.empty(resamples)
    for start in range(0, resamples, chunk):
        m = min(chunk, resamples - start)
        idx = gen.integers(0, n, size=(m, n))
        out[start:start + m] = values[idx].mean(axis=1)
    return out


def bootstrap_mean_ci(e, level=0.95, resamples=2000, rng=0):
    """Percentile bootstrap interval for the mean.

    Deterministic for a fixed ``rng`` seed; needs at least 30 values.
    """
    e = _as_dist(e)
    if e.n < 30:
        raise TooFewSamples("the bootstrap needs at least 30 values")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    means = _boot_means(e.sorted_values, resamples, rng)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def bootstrap_mean_se(e, resamples=1000, rng=0):
    """Bootstrap standard error of the mean."""
    e = _as_dist(e)
    if e.n < 30:
        raise TooFewSamples("the bootstrap needs at least 30 values")
    return float(np.std(_boot_means(e.sorted_values, resamples, rng), ddof=1))


def t_mean_ci(values, level=0.95):
    """Student-t interval for the mean of a few independent estimates."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise TooFewSamples("a t interval needs at least two values")
    half = _sps.t.ppf(0.5 + level / 2, x.size - 1) * np.std(x, ddof=1) / math.sqrt(x.size)
    m = float(np.mean(x))
    return m - float(half), m + float(half)


def histogram_density(e, bin_count):
    """``[(centre, density), ...]`` with ``sum(density) * width == 1``."""
    if bin_count < 2:
        raise DomainError("need at least two bins")
    e = _as_dist(e)
    dens, edges = np.histogram(e.sorted_values, bins=int(bin_count), density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return list(zip(centres.tolist(), dens.tolist()))
