"""Adaptive multilevel splitting for the reactive event ``{T_B < T_A}``.

The reaction coordinate is the position itself; the level of a replica is
the running maximum of its path.  Each iteration removes the replicas whose
level is at or below the ``kill_count``-th lowest level among those absorbed
at A, and rebranches each of them from a surviving replica at the first
point where the survivor strictly exceeded the removed level.  Removing
every tied replica (not just ``kill_count``) keeps the estimator
``prod (1 - killed / n_replicas)`` unbiased when many replicas share the
starting level, which happens whenever they fall back to A immediately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, DomainError, Extinction, HorizonExceeded
from .mc_sampler import EmpiricalSample, SimConfig, _fan_out
from .rng import CHOICE, Stream, as_stream


@dataclass(frozen=True)
class AmsConfig:
    """Splitting parameters.

    ``absorbing_level`` and ``stop_level`` default to the interval ends of
    the problem; ``sim`` carries the time step, seed and horizon.
    """

    sim: SimConfig
    n_replicas: int = 100
    kill_count: int = 1
    absorbing_level: float | None = None
    stop_level: float | None = None
    max_iterations: int = 1_000_000

    def __post_init__(self):
        if self.n_replicas < 2:
            raise DomainError("n_replicas must be at least 2")
        if not 1 <= self.kill_count < self.n_replicas:
            raise DomainError("need 1 <= kill_count < n_replicas")

    def levels(self, prob):
        A = prob.a if self.absorbing_level is None else float(self.absorbing_level)
        B = prob.b if self.stop_level is None else float(self.stop_level)
        if not A < prob.x < B:
            raise DomainError("need A < x < B")
        return A, B

    def to_dict(self):
        return {"n_replicas": self.n_replicas, "kill_count": self.kill_count,
                "absorbing_level": self.absorbing_level, "stop_level": self.stop_level,
                "sim": self.sim.to_dict()}


@dataclass
class Replica:
    """Final state of one replica.

    Only the running-maximum records of the path are kept: ``rec_k`` are
    step indices from the start of the genealogy, ``rec_x`` the strictly
    increasing record values (the absorbed end point is not a record).  They
    are all branching needs, since the first point above any level is a
    record.
    """

    rec_k: np.ndarray
    rec_x: np.ndarray
    side: int
    n_steps: int
    lineage: list  # [(segment_id, n_steps)], consecutive pieces of the path

    @property
    def level(self):
        return math.inf if self.side > 0 else float(self.rec_x[-1])


@dataclass
class AmsResult:
    probability_estimate: float
    sample: EmpiricalSample
    n_iterations: int
    replicas: list = field(repr=False, default_factory=list)
    segment_starts: dict = field(repr=False, default_factory=dict)
    killed_per_iteration: list = field(repr=False, default_factory=list)

    def __iter__(self):
        yield self.probability_estimate
        yield self.sample
        yield self.n_iterations


class _Run:
    def __init__(self, prob, acfg, stream):
        self.prob = prob
        self.cfg = acfg.sim
        self.A, self.B = acfg.levels(prob)
        self.stream = stream
        self.kern = self.cfg.kernels
        self.next_id = 0
        self.starts = {}

    def _batch(self, x0s, ids):
        p, c = self.prob.potential, self.cfg
        return self.kern.ladder_segments(
            p.kernel_code, p.param, self.A, self.B, np.asarray(x0s, dtype=float),
            np.asarray(ids, dtype=np.int64), self.prob.epsilon, c.dt, c.max_steps,
            c.bridge_correction, int(self.stream.seed), self.stream.index)

    def segments(self, x0s, ids, chunk=256):
        """Simulate segments; returns a list of ``(side, steps, rec_k, rec_x)``."""
        for i, x0 in zip(ids, x0s):
            self.starts[i] = float(x0)
        bounds = list(range(0, len(ids), chunk))
        parts = _fan_out(lambda b: self._batch(x0s[b:b + chunk], ids[b:b + chunk]), bounds)
        out = []
        for side, steps, off, rk, rx in parts:
            if np.any(side == 0):
                raise HorizonExceeded("a splitting segment reached neither level")
            for j in range(side.size):
                out.append((int(side[j]), int(steps[j]), rk[off[j]:off[j + 1]],
                            rx[off[j]:off[j + 1]]))
        return out

    def path(self, x0, seg_id):
        p, c = self.prob.potential, self.cfg
        return self.kern.segment_path(
            p.kernel_code, p.param, self.A, self.B, x0, self.prob.epsilon, c.dt, c.max_steps,
            c.bridge_correction, int(self.stream.seed), self.stream.index, seg_id)

    def new_ids(self, k):
        ids = list(range(self.next_id, self.next_id + k))
        self.next_id += k
        return ids


def _truncate_lineage(lineage, n_steps):
    out, used = [], 0
    for seg, m in lineage:
        if used + m >= n_steps:
            out.append((seg, n_steps - used))
            return out
        out.append((seg, m))
        used += m
    return out


def run_ams(prob, acfg, rng=None):
    """Estimate ``P_x(T_B < T_A)`` and sample reactive durations by splitting.

    Parameters
    ----------
    prob : ExitProblem
        Start point and temperature; interval ends are the default levels.
    acfg : AmsConfig
    rng : int or Stream, optional
        Stream of this run; defaults to ``(acfg.sim.seed, 0)``.

    Returns
    -------
    AmsResult
        Unpacks as ``(probability_estimate, sample, n_iterations)``.  The
        sample holds the lengths of all final replica paths, each measured
        from the start of its genealogy.

    Raises
    ------
    Extinction
        When one iteration would remove every replica.
    BudgetExceeded
        After ``acfg.max_iterations`` iterations.
    """
    if prob.epsilon != acfg.sim.epsilon:
        raise DomainError("problem and configuration temperatures differ")
    stream = as_stream(rng) if rng is not None else Stream(acfg.sim.seed)
    run = _Run(prob, acfg, stream)
    N = acfg.n_replicas
    ids = run.new_ids(N)
    segs = run.segments(np.full(N, prob.x), ids)
    reps = [Replica(rk, rx, side, steps, [(i, steps)])
            for i, (side, steps, rk, rx) in zip(ids, segs)]
    levels = np.array([r.level for r in reps])
    estimate = 1.0
    iterations = 0
    killed_log = []
    while True:
        absorbed = np.flatnonzero(np.isfinite(levels))
        if absorbed.size == 0:
            break
        if iterations >= acfg.max_iterations:
            raise BudgetExceeded(f"no completion after {iterations} iterations", partial=estimate)
        k = min(acfg.kill_count, absorbed.size)
        z = np.partition(levels[absorbed], k - 1)[k - 1]
        killed = np.flatnonzero(levels <= z)
        survivors = np.flatnonzero(levels > z)
        if survivors.size == 0:
            raise Extinction(f"all replicas at level {z} after {iterations} iterations",
                             estimate=0.0, iterations=iterations)
        estimate *= 1.0 - killed.size / N
        u, _ = stream.uniforms(iterations, np.arange(killed.size), CHOICE)
        pick = np.minimum((u * survivors.size).astype(np.int64), survivors.size - 1)
        fresh, starts, plans = [], [], []
        for j, r in enumerate(killed):
            parent = reps[survivors[pick[j]]]
            b = int(np.searchsorted(parent.rec_x, z, side="right"))
            if b == parent.rec_x.size:
                # the parent crossed B before any grid point above z: clone it whole
                plans.append((r, parent, None))
            else:
                plans.append((r, parent, b))
                fresh.append(len(plans) - 1)
                starts.append(parent.rec_x[b])
        new = run.new_ids(len(fresh))
        res = run.segments(np.array(starts), new) if fresh else []
        for r, parent, b in plans:
            if b is None:
                reps[r] = Replica(parent.rec_k, parent.rec_x, parent.side, parent.n_steps,
                                  list(parent.lineage))
        for seg_id, pi, (side, steps, rk, rx) in zip(new, fresh, res):
            r, parent, b = plans[pi]
            g = int(parent.rec_k[b])
            reps[r] = Replica(
                np.concatenate([parent.rec_k[:b + 1], rk[1:] + g]),
                np.concatenate([parent.rec_x[:b + 1], rx[1:]]),
                side, g + steps,
                _truncate_lineage(parent.lineage, g) + [(seg_id, steps)])
        for r, _, _ in plans:
            levels[r] = reps[r].level
        killed_log.append(int(killed.size))
        iterations += 1
    dt = acfg.sim.dt
    durations = np.array([r.n_steps * dt for r in reps])
    meta = {"potential": prob.potential.tag, "epsilon": prob.epsilon, "a": run.A, "b": run.B,
            "x": prob.x, "sampler": "ams", "seed": int(stream.seed), "stream": stream.index,
            "dt": dt, "n_replicas": N, "kill_count": acfg.kill_count,
            "probability_estimate": estimate, "iterations": iterations}
    sample = EmpiricalSample(durations, N, meta, replica=np.arange(N, dtype=np.int64))
    return AmsResult(estimate, sample, iterations, reps, run.starts, killed_log)


def path_records(path):
    """Running-maximum records ``(k, x)`` of a live path (its last point excluded)."""
    live = np.asarray(path[:-1], dtype=float)
    run_max = np.maximum.accumulate(live)
    new = np.concatenate([[True], live[1:] > run_max[:-1]])
    k = np.flatnonzero(new)
    return k, live[k]


def replay_lineage(prob, acfg, result, replica, rng=None):
    """Rebuild a final replica path by re-simulating its segments.

    Each segment is regenerated from its recorded start point on its own
    counter-based path index; consecutive pieces must join end to start.
    """
    stream = as_stream(rng) if rng is not None else Stream(acfg.sim.seed)
    run = _Run(prob, acfg, stream)
    pieces = []
    last = None
    for seg_id, m in result.replicas[replica].lineage:
        x0 = result.segment_starts[seg_id]
        if last is not None and x0 != last:
            raise AssertionError(f"segment {seg_id} does not start where its parent stopped")
        path, _ = run.path(x0, seg_id)
        if m > path.size - 1:
            raise AssertionError(f"segment {seg_id} is shorter than its lineage piece")
        piece = path[: m + 1]
        pieces.append(piece if not pieces else piece[1:])
        last = float(piece[-1])
    return np.concatenate(pieces)


def ams_estimates(prob, acfg, runs, first_stream=0):
    """Probability estimates of ``runs`` independent runs (extinct runs count as 0)."""
    out = np.empty(runs)
    iters = np.empty(runs, dtype=np.int64)
    for k in range(runs):
        try:
            res = run_ams(prob, acfg, Stream(acfg.sim.seed, first_stream + k))
            out[k], iters[k] = res.probability_estimate, res.n_iterations
        except Extinction as exc:
            out[k], iters[k] = 0.0, exc.iterations
    return out, iters
