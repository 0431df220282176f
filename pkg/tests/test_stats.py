import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from reactive_paths.errors import DomainError, TooFewSamples
from reactive_paths.stats import (EmpiricalDistribution, bootstrap_mean_ci, bootstrap_mean_se,
                                  histogram_density, ks_distance, ks_two_sample, mean_se,
                                  t_mean_ci)

samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=200)


@given(samples)
def test_ks_distance_matches_scipy(xs):
    ours = ks_distance(xs, sps.norm(3.0, 50.0).cdf)
    ref = sps.kstest(xs, sps.norm(3.0, 50.0).cdf).statistic
    assert ours == pytest.approx(ref, abs=1e-12)


@given(samples)
def test_empirical_cdf_steps(xs):
    e = EmpiricalDistribution.of(xs)
    assert e.cdf(e.sorted_values[-1]) == 1.0
    assert np.all(np.diff(e.cdf(np.linspace(-1e3, 1e3, 50))) >= 0)


def test_ks_two_sample_extremes():
    assert ks_two_sample([1, 2, 3], [1, 2, 3]) == 0.0
    assert ks_two_sample([0, 1], [5, 6]) == 1.0


def test_bootstrap_is_deterministic_and_covers_mean():
    x = np.random.default_rng(5).exponential(2.0, size=500)
    a = bootstrap_mean_ci(x, rng=11)
    assert a == bootstrap_mean_ci(x, rng=11)
    assert a != bootstrap_mean_ci(x, rng=12)
    assert a[0] < x.mean() < a[1]
    se = bootstrap_mean_se(x, rng=3)
    assert se == pytest.approx(mean_se(x), rel=0.15)


def test_bootstrap_guards():
    with pytest.raises(TooFewSamples):
        bootstrap_mean_ci(np.arange(10.0))
    with pytest.raises(DomainError):
        bootstrap_mean_ci(np.arange(40.0), level=1.5)
    with pytest.raises(TooFewSamples):
        EmpiricalDistribution.of([])


def test_t_interval():
    lo, hi = t_mean_ci([1.0, 2.0, 3.0], 0.95)
    half = sps.t.ppf(0.975, 2) * 1.0 / np.sqrt(3)
    assert (lo, hi) == pytest.approx((2 - half, 2 + half))
    with pytest.raises(TooFewSamples):
        t_mean_ci([1.0])


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=300).filter(lambda v: np.ptp(v) > 1e-6),
       st.integers(2, 80))
def test_histogram_integrates_to_one(xs, bins):
    h = histogram_density(xs, bins)
    centres = np.array([c for c, _ in h])
    width = centres[1] - centres[0]
    assert sum(d for _, d in h) * width == pytest.approx(1.0, rel=1e-9)


def test_histogram_needs_two_bins():
    with pytest.raises(DomainError):
        histogram_density([1.0, 2.0], 1)


def test_ks_examples():
    g = sps.gumbel_r()
    x = g.rvs(size=100_000, random_state=np.random.default_rng(0))
    assert ks_distance(x, g.cdf) <= 0.006
    assert ks_distance([0.0], sps.norm.cdf) == pytest.approx(0.5)
    y = g.rvs(size=5000, random_state=np.random.default_rng(1))
    assert ks_two_sample(y, y + 1.0) > 0.2


def test_bootstrap_examples():
    lo, hi = bootstrap_mean_ci(np.full(50, 2.5))
    assert lo == hi == 2.5
    x = np.random.default_rng(2).standard_normal(10_000)
    lo, hi = bootstrap_mean_ci(x, resamples=500)
    assert hi - lo == pytest.approx(2 * 1.96 / 100, rel=0.2)


def test_bootstrap_coverage():
    gen = np.random.default_rng(3)
    hits = 0
    for r in range(200):
        lo, hi = bootstrap_mean_ci(gen.exponential(size=200), resamples=300, rng=r)
        hits += lo <= 1.0 <= hi
    assert hits >= 180
