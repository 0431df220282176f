import math

import numpy as np
import pytest

from reactive_paths import _kernels_py as ref
from reactive_paths import kernels
from reactive_paths.exit_laws import ExitProblem, htransform_table
from reactive_paths.potentials import Potential
from reactive_paths.rng import BRIDGE, Stream

compiled = kernels.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")
QUARTIC = Potential.quartic()


def scalar_exit(p, a, b, x0, eps, dt, seed, stream, path, bridge=True, max_steps=10**6):
    """One path, one step at a time, straight from the stream definitions."""
    st = Stream(seed, stream)
    x = x0
    sig = math.sqrt(2 * eps * dt)
    for k in range(max_steps):
        z = float(st.normals(path, k))
        xn = x - float(p.dV(x)) * dt + sig * z
        if xn <= a:
            return k + 1, -1
        if xn >= b:
            return k + 1, 1
        if bridge:
            ua, ub = (float(v) for v in st.uniforms(path, k, BRIDGE))
            arg_a = (x - a) * (xn - a) / (eps * dt)
            if arg_a < 40 and ua < math.exp(-arg_a):
                return k + 1, -1
            arg_b = (x - b) * (xn - b) / (eps * dt)
            if arg_b < 40 and ub < math.exp(-arg_b):
                return k + 1, 1
        x = xn
    return max_steps, 0


@pytest.mark.parametrize("bridge", [True, False])
def test_fallback_exit_matches_scalar_oracle(bridge):
    eps, dt = 0.3, 1e-3
    steps, side = ref.exit_attempts(QUARTIC.kernel_code, 0.0, -0.9, 0.9, -0.8, eps, dt, 10**6,
                                    bridge, 42, 3, 10, 25)
    for j in range(25):
        assert (steps[j], side[j]) == scalar_exit(QUARTIC, -0.9, 0.9, -0.8, eps, dt, 42, 3, 10 + j, bridge)


def test_horizon_leaves_side_zero():
    steps, side = ref.exit_attempts(0, 0.0, -0.9, 0.9, 0.0, 0.01, 1e-3, 5, True, 1, 0, 0, 4)
    assert np.all(side == 0) and np.all(steps == 5)


def test_grad_codes_match_potentials():
    x = np.linspace(-0.9, 0.9, 11)
    for p in (QUARTIC, Potential.quadratic(2.0), Potential.abs_barrier(0.5), Potential.flat(1.0),
              Potential.monomial(2)):
        np.testing.assert_allclose(ref.grad(p.kernel_code, p.param, x), p.dV(x), atol=1e-15)
        for v in x:
            assert ref._grad_scalar(p.kernel_code, p.param, float(v)) == pytest.approx(float(p.dV(v)), abs=1e-15)


def test_ratio_sweep_solves_the_tridiagonal_system():
    rng = np.random.default_rng(0)
    n = 12
    cl, cr, m = rng.uniform(0.5, 2, n), rng.uniform(0.5, 2, n), rng.uniform(0.1, 1, n)
    s = 0.7
    # (cl + cr + s m) u_i - cl u_{i-1} - cr u_{i+1} = 0, u_0 = 0, u_{n+1} = 1
    A = np.diag(cl + cr + s * m) - np.diag(cl[1:], -1) - np.diag(cr[:-1], 1)
    rhs = np.zeros(n)
    rhs[-1] = cr[-1]
    u = np.linalg.solve(A, rhs)
    log_den = ref.ratio_sweep(cl, cr, m, s)
    log_u = np.array([np.sum(np.log(cr[j:]) - log_den[j:]) for j in range(n)])
    np.testing.assert_allclose(np.exp(log_u), u, rtol=1e-12)


def test_segment_path_records_match_ladder():
    x0s = np.array([-0.85, -0.6, -0.3])
    ids = np.array([4, 9, 2], dtype=np.int64)
    side, steps, off, rk, rx = ref.ladder_segments(0, 0.0, -0.9, 0.9, x0s, ids, 0.2, 1e-3, 10**6,
                                                   True, 5, 1)
    from reactive_paths.ams import path_records
    for j in range(3):
        path, s = ref.segment_path(0, 0.0, -0.9, 0.9, float(x0s[j]), 0.2, 1e-3, 10**6, True, 5, 1, int(ids[j]))
        assert s == side[j] and path.size - 1 == steps[j]
        k, x = path_records(path)
        np.testing.assert_array_equal(k, rk[off[j]:off[j + 1]])
        np.testing.assert_array_equal(x, rx[off[j]:off[j + 1]])


@needs_compiled
def test_backends_agree_on_exits():
    args = (0, 0.0, -0.9, 0.9, -0.85, 0.2, 1e-3, 10**6, True, 77, 2, 0, 300)
    s1, d1 = compiled.exit_attempts(*args)
    s2, d2 = ref.exit_attempts(*args)
    np.testing.assert_array_equal(s1, s2)
    np.testing.assert_array_equal(d1, d2)


@needs_compiled
def test_backends_agree_on_conditioned_paths():
    prob = ExitProblem(QUARTIC, -0.9, 0.9, -0.89, 0.2)
    tab = htransform_table(prob)
    args = (0, 0.0, -0.9, 0.9, -0.89, 0.2, 1e-3, 10**6, True, tab.lo, tab.step, tab.values, True,
            10, 3, 0, 0, 50)
    out1 = compiled.htransform_paths(*args)
    out2 = ref.htransform_paths(*args)
    np.testing.assert_allclose(out1[0], out2[0], rtol=1e-12)
    for a, b in zip(out1[1:], out2[1:]):
        np.testing.assert_array_equal(a, b)


@needs_compiled
def test_backends_agree_on_free_runs():
    args = (0, 0.0, -1.0, -1.0, 1.0, 0.1, 0.1, 0.25, 1e-3, 10**7, 8, 0, 0, 3)
    for a, b in zip(compiled.free_run_paths(*args), ref.free_run_paths(*args)):
        np.testing.assert_array_equal(a, b)


@needs_compiled
def test_backends_agree_on_segments_and_sweep():
    x0s = np.array([-0.85, -0.5, 0.1])
    ids = np.array([0, 1, 2], dtype=np.int64)
    args = (0, 0.0, -0.9, 0.9, x0s, ids, 0.2, 1e-3, 10**6, True, 11, 0)
    c, p = compiled.ladder_segments(*args), ref.ladder_segments(*args)
    for a, b in zip(c[:4], p[:4]):
        np.testing.assert_array_equal(a, b)
    # log1p/log of numpy and libm may differ in the last bit
    np.testing.assert_allclose(c[4], p[4], rtol=0, atol=1e-12)
    pc, sc = compiled.segment_path(0, 0.0, -0.9, 0.9, -0.85, 0.2, 1e-3, 10**6, True, 11, 0, 0)
    pp, sp = ref.segment_path(0, 0.0, -0.9, 0.9, -0.85, 0.2, 1e-3, 10**6, True, 11, 0, 0)
    assert sc == sp
    np.testing.assert_allclose(pc, pp, atol=1e-12)
    rng = np.random.default_rng(1)
    cl, cr, m = rng.uniform(0.1, 2, (3, 100))
    np.testing.assert_allclose(compiled.ratio_sweep(cl, cr, m, 0.5), ref.ratio_sweep(cl, cr, m, 0.5),
                               rtol=1e-14)


def test_backend_selection(monkeypatch):
    assert kernels.get_backend("numpy") is ref
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
    monkeypatch.setenv("REACTIVE_PATHS_THREADS", "3")
    assert kernels.max_workers() == 3
    monkeypatch.setenv("REACTIVE_PATHS_THREADS", "junk")
    assert kernels.max_workers() >= 1
    assert kernels.BACKEND_NAME in ("cython", "numpy")


def test_pure_backend_forced_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, REACTIVE_PATHS_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from reactive_paths import kernels; print(kernels.BACKEND_NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
