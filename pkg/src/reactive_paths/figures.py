"""Plot data for the three reactive-time figures.

Every function returns ``(rows, meta)``: CSV rows (a header first) and a
JSON-serialisable metadata dict embedding the configuration and seed.  A
run that exhausts its wall-clock budget keeps the finished temperatures
and sets ``meta["truncated"]``.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .ams import AmsConfig, run_ams
from .errors import Extinction
from .exit_laws import ExitProblem, conditioned_mean_bvp, exit_probability
from .limit_laws import theorem_1_4_law, theorem_3_3_law
from .mc_sampler import SimConfig, sample_reactive_rejection
from .potentials import Potential
from .rng import Stream
from .special_laws import GumbelLaw
from .stats import histogram_density, ks_two_sample, t_mean_ci

FIG1_EPSILONS = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01)
# the finite-temperature gap to the limit mean peaks near eps = 0.3; one grid
# point on the rising side
FIG2_EPSILONS = (1.0, 0.3, 0.1, 0.05, 0.02, 0.01)
FIG3_EPSILONS = FIG2_EPSILONS + (0.007,)
GEOMETRY = {"a": -0.9, "b": 0.9, "x": -0.89}
# rejection is used while P(reactive) stays above this; AMS below
REJECTION_FLOOR = 2e-3


def fig1_defaults():
    return {"potential": "quartic", **GEOMETRY, "epsilon": list(FIG1_EPSILONS),
            "n_samples": 10_000, "bins": 60, "seed": 0, "budget_seconds": 3600.0,
            "overlay_points": 4001}


def fig2_defaults():
    return {"potential": "quadratic:1", **GEOMETRY, "epsilon": list(FIG2_EPSILONS),
            "n_samples": 1000, "n_runs": 10, "seed": 0, "budget_seconds": 3600.0,
            "ci_level": 0.95, "cross_check_samples": 2000}


def fig3_defaults():
    return dict(fig2_defaults(), potential="quartic", epsilon=list(FIG3_EPSILONS))


def _seed_for(seed, k):
    return (int(seed) * 1_000_003 + 7919 * (k + 1)) % (1 << 64)


def reactive_sample(prob, n, seed, force=None, stream=0):
    """Reactive durations by rejection when affordable, else by splitting.

    Returns ``(durations, method, info)``.
    """
    cfg = SimConfig(prob.epsilon, seed=seed)
    p = exit_probability(prob)
    method = force or ("rejection" if p >= REJECTION_FLOOR else "ams")
    if method == "rejection":
        res = sample_reactive_rejection(prob, cfg, n)
        return res.durations, method, {"acceptance": res.acceptance, "attempts": res.n_attempts}
    acfg = AmsConfig(cfg, n_replicas=n, kill_count=max(1, n // 100))
    res = run_ams(prob, acfg, Stream(seed, stream))
    return res.sample.durations, method, {"probability_estimate": res.probability_estimate,
                                          "iterations": res.n_iterations}


def gumbel_overlay(law, points=4001, centered=False):
    """Density of a shifted Gumbel law on a grid carrying all but ~1e-13 of its mass."""
    g = GumbelLaw(law.location, law.scale)
    lo = law.location - 4.0 * law.scale
    hi = law.location + 32.0 * law.scale
    t = np.linspace(lo, hi, int(points))
    dens = g.density(t)
    if centered:
        t = t - g.mean
    return t, dens


def _budget_hit(t0, budget):
    return budget is not None and time.perf_counter() - t0 > budget


def figure_fig1(cfg):
    c = dict(fig1_defaults(), **cfg)
    pot = Potential.from_tag(c["potential"])
    header = ("series", "epsilon", "bin_center", "density")
    rows = [header]
    done, info, centered_ks = [], {}, {}
    prev = None
    t0 = time.perf_counter()
    truncated = False
    for k, e in enumerate(c["epsilon"]):
        if _budget_hit(t0, c["budget_seconds"]):
            truncated = True
            break
        prob = ExitProblem(pot, c["a"], c["b"], c["x"], float(e))
        d, method, extra = reactive_sample(prob, int(c["n_samples"]), _seed_for(c["seed"], k))
        for x, y in histogram_density(d, c["bins"]):
            rows.append(("density", e, x, y))
        for x, y in histogram_density(d - d.mean(), c["bins"]):
            rows.append(("centered", e, x, y))
        law = theorem_1_4_law(pot, c["x"], c["b"], float(e))
        for name, centered in (("gumbel", False), ("gumbel_centered", True)):
            t, dens = gumbel_overlay(law, c["overlay_points"], centered)
            rows.extend((name, e, float(a), float(b)) for a, b in zip(t, dens))
        if prev is not None:
            centered_ks[f"{prev[0]!r}|{float(e)!r}"] = ks_two_sample(prev[1], d - d.mean())
        prev = (float(e), d - d.mean())
        done.append(e)
        info[repr(float(e))] = dict(extra, method=method, n=int(d.size), mean=float(d.mean()))
    if truncated:
        rows.append(("TRUNCATED", "", "", ""))
    meta = {"figure": "fig1", "config": c, "completed_epsilons": done, "truncated": truncated,
            "runs": info, "centered_ks": centered_ks}
    return rows, meta


def _means_figure(c, name, theory_fn):
    pot = Potential.from_tag(c["potential"])
    header = ("log_eps", "epsilon", "mean", "ci_low", "ci_high", "theory", "exact",
              "rejection_mean", "method")
    rows = [header]
    done, info = [], {}
    t0 = time.perf_counter()
    truncated = False
    for k, e in enumerate(c["epsilon"]):
        e = float(e)
        if _budget_hit(t0, c["budget_seconds"]):
            truncated = True
            break
        prob = ExitProblem(pot, c["a"], c["b"], c["x"], e)
        seed = _seed_for(c["seed"], k)
        # replicas of one splitting run share ancestors, so the interval is
        # taken over independent runs
        run_means, extra = [], []
        for r in range(int(c["n_runs"])):
            try:
                d, method, ex = reactive_sample(prob, int(c["n_samples"]), seed, "ams", r)
            except Extinction:
                ex = {"extinct": True}
            else:
                run_means.append(float(d.mean()))
            extra.append(ex)
        if len(run_means) < 2:
            rows.append((math.log(e), e, "", "", "", theory_fn(e), "", "", "ams-extinct"))
            continue
        mean = float(np.mean(run_means))
        lo, hi = t_mean_ci(run_means, c["ci_level"])
        cross = ""
        if exit_probability(prob) >= REJECTION_FLOOR and c["cross_check_samples"]:
            r, _, _ = reactive_sample(prob, int(c["cross_check_samples"]), seed ^ 1, "rejection")
            cross = float(r.mean())
        exact = conditioned_mean_bvp(prob)
        rows.append((math.log(e), e, mean, lo, hi, theory_fn(e), exact, cross, "ams"))
        done.append(e)
        info[repr(e)] = {"run_means": run_means, "runs": extra}
    if truncated:
        rows.append(("TRUNCATED",) + ("",) * (len(header) - 1))
    return rows, {"figure": name, "config": c, "completed_epsilons": done,
                  "truncated": truncated, "runs": info}


def figure_fig2(cfg):
    """Mean reactive time against the Gumbel mean for the repulsive OU process."""
    c = dict(fig2_defaults(), **cfg)
    alpha = Potential.from_tag(c["potential"]).param

    def theory(e):
        return theorem_3_3_law(alpha, c["x"], c["b"], e).mean

    return _means_figure(c, "fig2", theory)


def figure_fig3(cfg):
    """Mean reactive time against the Gumbel mean for the double well."""
    c = dict(fig3_defaults(), **cfg)
    pot = Potential.from_tag(c["potential"])

    def theory(e):
        return theorem_1_4_law(pot, c["x"], c["b"], e).mean

    return _means_figure(c, "fig3", theory)


def gap_inversions(rows):
    """Count increases of ``|mean - theory|`` down the temperature grid.

    An increase smaller than the confidence half-width of the later point
    is within Monte Carlo noise and is not counted.
    """
    head, body = rows[0], [r for r in rows[1:] if r[0] != "TRUNCATED" and r[2] != ""]
    col = {name: i for i, name in enumerate(head)}
    count, last = 0, None
    for r in body:
        gap = abs(r[col["mean"]] - r[col["theory"]])
        half = 0.5 * (r[col["ci_high"]] - r[col["ci_low"]])
        if last is not None and gap - last > half:
            count += 1
        last = gap
    return count


FIGURES = {"fig1": figure_fig1, "fig2": figure_fig2, "fig3": figure_fig3}
DEFAULTS = {"fig1": fig1_defaults, "fig2": fig2_defaults, "fig3": fig3_defaults}

__all__ = ["figure_fig1", "figure_fig2", "figure_fig3", "gumbel_overlay", "reactive_sample",
           "gap_inversions",
           "FIGURES"]
