"""Monte Carlo sampling of exit and reactive times.

All samplers integrate ``dX = -V'(X) dt + sqrt(2 eps) dB`` with
Euler-Maruyama, optionally with a Brownian-bridge correction of boundary
crossings between grid times.  Replica ``i`` draws from stream
``(seed, i)`` and uses path indices ``0, 1, 2, ...`` in order, so results
depend only on the configuration, never on chunking or thread scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BudgetExceeded, DomainError, HorizonExceeded, StiffnessFloor
from .exit_laws import DriftTable, ExitProblem, htransform_table
from .kernels import get_backend, max_workers
from .rng import Stream, as_stream

SAMPLERS = ("naive-rejection", "h-transform", "free-run")


def default_dt(epsilon):
    return min(1e-3, epsilon / 10)


@dataclass(frozen=True)
class SimConfig:
    """Discretisation and budget of one Monte Carlo experiment.

    Parameters
    ----------
    epsilon : float
        Temperature.
    dt : float, optional
        Time step, default ``min(1e-3, epsilon / 10)``; must not exceed ``epsilon``.
    max_steps : int
        Horizon of a single trajectory, in steps.
    seed : int
        64-bit seed; replica ``i`` uses stream ``(seed, i)``.
    replicas : int
        Number of independent streams the sample is split over.
    sampler : str
        One of ``naive-rejection``, ``h-transform``, ``free-run``.
    bridge_correction : bool
        Brownian-bridge test for crossings between grid times.
    max_attempts : int
        Rejection budget per replica.
    max_halvings : int
        Step halvings allowed near the singular boundary of the h-transform.
    floor_fraction : float
        Tolerated fraction of h-transform proposals that hit the step floor.
    backend : str, optional
        ``"cython"`` or ``"numpy"``; the active backend when omitted.
    """

    epsilon: float
    dt: float | None = None
    max_steps: int = 10_000_000
    seed: int = 0
    replicas: int = 1
    sampler: str = "naive-rejection"
    bridge_correction: bool = True
    max_attempts: int = 100_000_000
    max_halvings: int = 10
    floor_fraction: float = 1e-3
    backend: str | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.dt is None:
            object.__setattr__(self, "dt", default_dt(self.epsilon))
        if not 0 < self.dt <= self.epsilon:
            raise DomainError("need 0 < dt <= epsilon")
        if self.replicas < 1 or self.max_steps < 1:
            raise DomainError("replicas and max_steps must be positive")
        if self.sampler not in SAMPLERS:
            raise DomainError(f"unknown sampler {self.sampler!r}")
        if not 0 <= int(self.seed) < 1 << 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def horizon(self):
        return self.max_steps * self.dt

    @property
    def kernels(self):
        return get_backend(self.backend)

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {"epsilon": self.epsilon, "dt": self.dt, "max_steps": self.max_steps,
                "seed": int(self.seed), "replicas": self.replicas, "sampler": self.sampler,
                "bridge_correction": self.bridge_correction}


@dataclass
class EmpiricalSample:
    """Sampled durations with their provenance.

    ``attempts[i]`` is the number of trajectories spent on ``durations[i]``
    (always 1 except for rejection), ``replica[i]`` the stream it came from.
    """

    durations: np.ndarray
    n_attempts: int
    meta: dict
    attempts: np.ndarray | None = None
    replica: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.durations = np.asarray(self.durations, dtype=float)
        n = self.durations.size
        if self.attempts is None:
            self.attempts = np.ones(n, dtype=np.int64)
        if self.replica is None:
            self.replica = np.zeros(n, dtype=np.int64)

    def __len__(self):
        return self.durations.size

    @property
    def mean(self):
        return float(np.mean(self.durations))

    @property
    def acceptance(self):
        return len(self) / self.n_attempts if self.n_attempts else math.nan

    def laplace(self, s):
        """Empirical ``E[exp(-s T)]``."""
        return float(np.mean(np.exp(-s * self.durations)))

    def rows(self):
        seed = self.meta.get("seed", 0)
        for d, a, r in zip(self.durations, self.attempts, self.replica):
            yield float(d), int(a), int(r), int(seed)


def _split(n, replicas):
    base, extra = divmod(int(n), replicas)
    return [base + (1 if i < extra else 0) for i in range(replicas)]


def _fan_out(fn, items):
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _meta(prob, cfg, sampler, **more):
    meta = {"potential": prob.potential.tag, "epsilon": prob.epsilon, "a": prob.a,
            "b": prob.b, "x": prob.x, "sampler": sampler, "seed": int(cfg.seed),
            "dt": cfg.dt, "bridge_correction": cfg.bridge_correction}
    meta.update(more)
    return meta


def _cfg_for(cfg, rng):
    if rng is None:
        return cfg
    return cfg.with_(seed=as_stream(rng).seed)


def _check_eps(prob, cfg):
    if prob.epsilon != cfg.epsilon:
        raise DomainError("problem and configuration temperatures differ")


# -- plain exits ------------------------------------------------------------


def sample_exits(prob, cfg, n, stream=0, path0=0):
    """``n`` exit times and sides (-1 for a, +1 for b) on one stream."""
    _check_eps(prob, cfg)
    p = prob.potential
    steps, side = cfg.kernels.exit_attempts(
        p.kernel_code, p.param, prob.a, prob.b, prob.x, prob.epsilon, cfg.dt,
        cfg.max_steps, cfg.bridge_correction, int(cfg.seed), stream, path0, int(n))
    if np.any(side == 0):
        raise HorizonExceeded(f"{int(np.sum(side == 0))} of {n} paths did not exit",
                              partial=(steps * cfg.dt, side))
    return steps * cfg.dt, side


def sample_exit(prob, cfg, rng_stream=None):
    """One exit ``(time, side)`` with side ``"a"`` or ``"b"``."""
    st = as_stream(rng_stream) if rng_stream is not None else Stream(cfg.seed)
    times, side = sample_exits(prob, cfg.with_(seed=st.seed), 1, stream=st.index)
    return float(times[0]), ("a" if side[0] < 0 else "b")


# -- rejection ------------------------------------------------------------


def _rejection_replica(prob, cfg, n_i, replica):
    """First ``n_i`` b-exits on stream ``replica`` in path order."""
    if n_i == 0:
        return np.empty(0), np.empty(0, dtype=np.int64), 0
    p = prob.potential
    kern = cfg.kernels
    times, attempts = [], []
    path0 = 0
    last_acc = -1
    chunk = max(64, 2 * n_i)
    while len(times) < n_i:
        if path0 >= cfg.max_attempts:
            raise BudgetExceeded(
                f"acceptance below 1/{cfg.max_attempts} on replica {replica}",
                partial=(np.array(times), np.array(attempts)))
        m = min(chunk, cfg.max_attempts - path0)
        steps, side = kern.exit_attempts(
            p.kernel_code, p.param, prob.a, prob.b, prob.x, prob.epsilon, cfg.dt,
            cfg.max_steps, cfg.bridge_correction, int(cfg.seed), replica, path0, m)
        if np.any(side == 0):
            raise HorizonExceeded(f"a trajectory of replica {replica} did not exit",
                                  partial=(np.array(times), np.array(attempts)))
        for j in np.flatnonzero(side == 1):
            if len(times) == n_i:
                break
            times.append(steps[j] * cfg.dt)
            attempts.append(path0 + j - last_acc)
            last_acc = path0 + j
        path0 += m
        got = len(times)
        rate = max(got, 1) / path0
        chunk = int(min(max(64, 1.2 * (n_i - got) / rate), 1 << 20))
    return np.array(times), np.array(attempts, dtype=np.int64), last_acc + 1


def sample_reactive_rejection(prob, cfg, n, rng=None):
    """``n`` exit times conditioned on leaving through b, by rejection.

    The acceptance rate ``len / n_attempts`` estimates the committor.
    """
    cfg = _cfg_for(cfg, rng)
    _check_eps(prob, cfg)
    shares = _split(n, cfg.replicas)
    parts = _fan_out(lambda i: _rejection_replica(prob, cfg, shares[i], i), range(cfg.replicas))
    return EmpiricalSample(
        np.concatenate([t for t, _, _ in parts]),
        int(sum(k for _, _, k in parts)),
        _meta(prob, cfg, "naive-rejection"),
        attempts=np.concatenate([a for _, a, _ in parts]),
        replica=np.concatenate([np.full(len(t), i, dtype=np.int64) for i, (t, _, _) in enumerate(parts)]),
    )


# -- h-transform ------------------------------------------------------------


def _htransform_run(potential, a, stop, x0, eps, cfg, table, n, replica, bridge=None):
    kern = cfg.kernels
    bridge = cfg.bridge_correction if bridge is None else bridge
    singular = table.singular_at is not None
    times, status, floors, props = kern.htransform_paths(
        potential.kernel_code, potential.param, a if singular else -math.inf, stop, x0, eps,
        cfg.dt, cfg.max_steps, bridge, table.lo, table.step, table.values, singular,
        cfg.max_halvings, int(cfg.seed), replica, 0, int(n))
    if np.any(status == 0):
        raise HorizonExceeded(f"{int(np.sum(status == 0))} conditioned paths did not reach {stop}",
                              partial=times[status == 1])
    total = int(props.sum())
    if total and floors.sum() > cfg.floor_fraction * total:
        raise StiffnessFloor(f"step floor hit on {int(floors.sum())} of {total} proposals")
    return times, total


def sample_reactive_htransform(prob, cfg, n, rng=None, table=None, stop=None, start=None):
    """``n`` conditioned exit times from the h-transformed dynamics.

    Every trajectory reaches b; no rejection.  ``stop`` and ``start`` move
    the target and the initial point inside (a, b) while keeping the
    conditioning on the original interval.
    """
    cfg = _cfg_for(cfg, rng)
    _check_eps(prob, cfg)
    table = htransform_table(prob) if table is None else table
    stop = prob.b if stop is None else float(stop)
    start = prob.x if start is None else float(start)
    shares = _split(n, cfg.replicas)
    parts = _fan_out(
        lambda i: _htransform_run(prob.potential, prob.a, stop, start, prob.epsilon, cfg,
                                  table, shares[i], i),
        range(cfg.replicas))
    return EmpiricalSample(
        np.concatenate([t for t, _ in parts]), int(n),
        _meta(prob, cfg, "h-transform", start=start, stop=stop,
              proposals=int(sum(k for _, k in parts))),
        replica=np.concatenate([np.full(len(t), i, dtype=np.int64) for i, (t, _) in enumerate(parts)]),
    )


def sample_tabulated(potential, table, x0, stop, eps, cfg, n, rng=None):
    """Paths of ``dX = (-V' + 2 eps c(X)) dt + sqrt(2 eps) dB`` until ``X >= stop``.

    ``c`` comes from ``table``; used for explosion times of processes whose
    drift correction has no singular boundary.
    """
    cfg = _cfg_for(cfg, rng)
    shares = _split(n, cfg.replicas)
    parts = _fan_out(
        lambda i: _htransform_run(potential, -math.inf, stop, x0, eps, cfg, table, shares[i], i,
                                  bridge=False),
        range(cfg.replicas))
    return np.concatenate([t for t, _ in parts])


# -- segments ---------------------------------------------------------------


def sample_segment(prob, cfg, start, to, n, condition_side="b", rng=None, method=None, table=None):
    """Time to go from ``start`` to ``to`` for paths leaving (a, b) through b.

    By the strong Markov property this is the hitting time of ``to`` for
    the dynamics conditioned on reaching ``to`` before a; the rejection
    method therefore samples the exit problem on (a, to).
    """
    if condition_side != "b":
        raise DomainError("only conditioning on the b side is supported")
    if not prob.a < start < to <= prob.b:
        raise DomainError("need a < start < to <= b")
    cfg = _cfg_for(cfg, rng)
    method = method or ("naive-rejection" if cfg.sampler == "naive-rejection" else "h-transform")
    if method == "naive-rejection":
        sub = ExitProblem(prob.potential, prob.a, to, start, prob.epsilon)
        out = sample_reactive_rejection(sub, cfg, n)
    else:
        out = sample_reactive_htransform(prob, cfg, n, table=table, stop=to, start=start)
    out.meta.update(start=start, stop=to, segment_method=method)
    return out


# -- free runs --------------------------------------------------------------


def extract_reactive_segment(potential, cfg, delta_x, delta_y, n, rng=None, x_start=None):
    """Free runs from ``x*`` until ``|X - y*| < delta_y``.

    Returns the reactive durations ``T - S``, with ``S`` the last time in
    ``|X - x*| < delta_x``; the transition times ``T`` are in
    ``extras["transition_times"]``.
    """
    cfg = _cfg_for(cfg, rng)
    x_star, y_star = potential.wells
    if not (math.isfinite(x_star) and math.isfinite(y_star)):
        raise DomainError("free runs need a double-well landscape")
    if not (delta_x > 0 and delta_y > 0):
        raise DomainError("ball radii must be positive")
    x0 = x_star if x_start is None else float(x_start)
    shares = _split(n, cfg.replicas)

    def run(i):
        return cfg.kernels.free_run_paths(
            potential.kernel_code, potential.param, x0, x_star, y_star, delta_x, delta_y,
            cfg.epsilon, cfg.dt, cfg.max_steps, int(cfg.seed), i, 0, shares[i])

    parts = _fan_out(run, range(cfg.replicas))
    t_steps = np.concatenate([p[0] for p in parts])
    s_steps = np.concatenate([p[1] for p in parts])
    status = np.concatenate([p[2] for p in parts])
    if np.any(status == 0):
        raise HorizonExceeded(f"{int(np.sum(status == 0))} free runs did not reach y*",
                              partial=(t_steps[status == 1] * cfg.dt))
    meta = {"potential": potential.tag, "epsilon": cfg.epsilon, "x": x0, "x_star": x_star,
            "y_star": y_star, "delta_x": delta_x, "delta_y": delta_y, "sampler": "free-run",
            "seed": int(cfg.seed), "dt": cfg.dt}
    return EmpiricalSample(
        (t_steps - s_steps) * cfg.dt, int(n), meta,
        replica=np.concatenate([np.full(len(p[0]), i, dtype=np.int64) for i, p in enumerate(parts)]),
        extras={"transition_times": t_steps * cfg.dt, "last_exit_times": s_steps * cfg.dt},
    )


def sample(prob, cfg, n, rng=None):
    """Dispatch on ``cfg.sampler`` for the conditioned exit problem."""
    if cfg.sampler == "naive-rejection":
        return sample_reactive_rejection(prob, cfg, n, rng)
    if cfg.sampler == "h-transform":
        return sample_reactive_htransform(prob, cfg, n, rng)
    raise DomainError("free-run sampling goes through extract_reactive_segment")


__all__ = ["SimConfig", "EmpiricalSample", "DriftTable", "sample_exit", "sample_exits",
           "sample_reactive_rejection", "sample_reactive_htransform", "sample_segment",
           "extract_reactive_segment", "sample_tabulated", "sample", "default_dt"]
