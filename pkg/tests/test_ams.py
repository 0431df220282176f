import math

import numpy as np
import pytest

from reactive_paths.ams import AmsConfig, ams_estimates, path_records, replay_lineage, run_ams
from reactive_paths.errors import DomainError, Extinction
from reactive_paths.exit_laws import ExitProblem, exit_probability
from reactive_paths.mc_sampler import SimConfig
from reactive_paths.potentials import Potential
from reactive_paths.rng import Stream

QUARTIC = Potential.quartic()


def test_config_validation():
    sim = SimConfig(0.2)
    with pytest.raises(DomainError):
        AmsConfig(sim, n_replicas=1)
    with pytest.raises(DomainError):
        AmsConfig(sim, n_replicas=10, kill_count=10)
    acfg = AmsConfig(sim, n_replicas=10, absorbing_level=-0.5)
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.6, 0.2)
    with pytest.raises(DomainError):
        acfg.levels(prob)
    assert AmsConfig(sim).levels(prob) == (-0.9, 0.9)


@pytest.mark.parametrize("pot,x,eps", [(Potential.flat(1.0), -0.9, 0.5), (QUARTIC, -0.89, 0.3)])
def test_estimator_is_unbiased(pot, x, eps):
    prob = ExitProblem(pot, -0.9 if pot.kind == "quartic" else -1.0,
                       0.9 if pot.kind == "quartic" else 1.0, x, eps)
    acfg = AmsConfig(SimConfig(eps, seed=13), n_replicas=40, kill_count=2)
    est, iters = ams_estimates(prob, acfg, 40)
    exact = exit_probability(prob)
    se = np.std(est, ddof=1) / math.sqrt(est.size)
    assert abs(est.mean() - exact) < 4 * se
    assert np.all(iters > 0)


def test_result_shape_and_determinism():
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.89, 0.2)
    acfg = AmsConfig(SimConfig(0.2, seed=3), n_replicas=50, kill_count=5)
    a = run_ams(prob, acfg)
    b = run_ams(prob, acfg)
    p, sample, n_it = a
    assert 0 < p < 1 and n_it == a.n_iterations > 0
    np.testing.assert_array_equal(a.sample.durations, b.sample.durations)
    assert a.probability_estimate == b.probability_estimate
    assert len(sample) == 50
    assert all(r.side == 1 for r in a.replicas)
    # every iteration rescales by the killed fraction
    ref = np.prod([1 - k / 50 for k in a.killed_per_iteration])
    assert p == pytest.approx(ref, rel=1e-14)
    c = run_ams(prob, acfg, Stream(3, 1))
    assert c.probability_estimate != a.probability_estimate


def test_genealogy_replays_to_each_duration():
    eps = 0.2
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.89, eps)
    acfg = AmsConfig(SimConfig(eps, seed=21), n_replicas=30)
    res = run_ams(prob, acfg)
    for i in range(0, 30, 7):
        path = replay_lineage(prob, acfg, res, i)
        rep = res.replicas[i]
        assert path.size - 1 == rep.n_steps
        assert res.sample.durations[i] == pytest.approx(rep.n_steps * acfg.sim.dt)
        assert path[0] == prob.x
        inner = path[:-1]
        assert np.all((inner > -0.9) & (inner < 0.9))
        k, xs = path_records(path)
        np.testing.assert_array_equal(k, rep.rec_k)
        np.testing.assert_array_equal(xs, rep.rec_x)


def test_replay_detects_broken_lineage():
    eps = 0.3
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.8, eps)
    acfg = AmsConfig(SimConfig(eps, seed=2), n_replicas=20)
    res = run_ams(prob, acfg)
    i = next(j for j, r in enumerate(res.replicas) if len(r.lineage) > 1)
    seg = res.replicas[i].lineage[1][0]
    res.segment_starts[seg] += 1e-3
    with pytest.raises(AssertionError):
        replay_lineage(prob, acfg, res, i)


def test_extinction_when_every_replica_ties():
    # a hair above A the bridge test absorbs every replica on its first
    # step, so all of them tie at the starting level
    eps = 0.05
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.9 + 1e-12, eps)
    extinct = []
    for seed in range(5):
        acfg = AmsConfig(SimConfig(eps, seed=seed), n_replicas=2)
        try:
            run_ams(prob, acfg)
        except Extinction as exc:
            assert exc.estimate == 0.0 and exc.iterations == 0
            extinct.append(acfg)
    assert len(extinct) == 5
    est, _ = ams_estimates(prob, extinct[0], 1)
    assert est[0] == 0.0


def test_path_records():
    k, x = path_records(np.array([0.0, -0.1, 0.2, 0.1, 0.3, 0.3, 5.0]))
    assert k.tolist() == [0, 2, 4]
    assert x.tolist() == [0.0, 0.2, 0.3]


def test_warm_estimate_matches_committor():
    eps = 1.0
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.89, eps)
    acfg = AmsConfig(SimConfig(eps, seed=5), n_replicas=50, kill_count=5)
    est, _ = ams_estimates(prob, acfg, 50)
    se = np.std(est, ddof=1) / math.sqrt(est.size)
    assert abs(est.mean() - exit_probability(prob)) < 3 * se


def test_two_replicas_halve_each_iteration():
    eps = 0.3
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.5, eps)
    seen = 0
    for seed in range(10):
        acfg = AmsConfig(SimConfig(eps, seed=seed), n_replicas=2, kill_count=1)
        try:
            res = run_ams(prob, acfg)
        except Extinction:
            continue
        seen += 1
        assert res.probability_estimate == 0.5 ** res.n_iterations
    assert seen > 0


@pytest.mark.slow
def test_cold_durations_match_rejection():
    from reactive_paths.mc_sampler import sample_reactive_rejection
    eps = 0.05
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.89, eps)
    acfg = AmsConfig(SimConfig(eps, seed=9), n_replicas=100, kill_count=5)
    means = [run_ams(prob, acfg, Stream(9, r)).sample.durations.mean() for r in range(20)]
    rej = sample_reactive_rejection(prob, SimConfig(eps, seed=4), 800).durations
    se = math.hypot(np.std(means, ddof=1) / math.sqrt(20), np.std(rej, ddof=1) / math.sqrt(800))
    assert abs(np.mean(means) - rej.mean()) < 3 * se
