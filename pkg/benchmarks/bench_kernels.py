"""Time the compiled kernels against the numpy fallback on identical work.

    python benchmarks/bench_kernels.py [--paths 500] [--repeat 3]

Both backends draw the same counter-based random numbers, so the integer
outcomes they return are compared as a sanity check before timing.
"""
import argparse
import time

import numpy as np

from reactive_paths import kernels
from reactive_paths.potentials import Potential


def _cases(paths):
    q = Potential.quartic()
    code, par = q.kernel_code, q.param
    eps, dt = 0.2, 1e-3
    x0s = np.full(paths, -0.89)
    ids = np.arange(paths, dtype=np.int64)
    cl = np.random.default_rng(0).uniform(0.5, 1.5, 200_000)
    return {
        "exit_attempts": lambda k: k.exit_attempts(code, par, -0.9, 0.9, -0.5, eps, dt, 10**7,
                                                   True, 1, 0, 0, paths)[1],
        "ladder_segments": lambda k: k.ladder_segments(code, par, -0.9, 0.9, x0s, ids, eps, dt,
                                                       10**7, True, 1, 0)[1],
        "ratio_sweep": lambda k: k.ratio_sweep(cl, cl[::-1].copy(), cl * 1e-3, 1.0),
    }


def _best(fn, backend, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--paths", type=int, default=500)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if kernels.compiled is None:
        print("compiled kernels not built; only the fallback can be timed")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, fn in _cases(args.paths).items():
        t_py, out_py = _best(fn, kernels.fallback, args.repeat)
        if kernels.compiled is None:
            print(f"{name:<18}{t_py:>12.4f}{'-':>12}{'-':>10}")
            continue
        t_c, out_c = _best(fn, kernels.compiled, args.repeat)
        if name == "ratio_sweep":
            assert np.allclose(out_py, out_c, rtol=1e-12, atol=0)
        else:
            assert np.array_equal(out_py, out_c), f"{name}: backends disagree"
        print(f"{name:<18}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>10.1f}")


if __name__ == "__main__":
    main()
