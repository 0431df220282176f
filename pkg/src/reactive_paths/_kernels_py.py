"""Pure numpy implementation of the simulation kernels.

Mirrors ``_kernels.pyx`` call for call.  Paths are advanced in lock-step
(vectorised over paths, looping over time) and draw the same Philox numbers
as the compiled loops, so both backends agree up to libm rounding.
"""
import math

import numpy as np

from .rng import BRIDGE, Stream

NAME = "numpy"

_SIDE_A = -1
_SIDE_B = 1
_BRIDGE_CUT = 40.0


def grad(code, param, x):
    """``V'(x)`` by kernel code, written with explicit products as in C."""
    if code == 0:
        return x * x * x - x
    if code == 1:
        return -param * x
    if code == 2:
        return -param * np.sign(x)
    if code == 3:
        return np.zeros_like(x)
    n = int(param)
    x2 = x * x
    out = x.copy()
    for _ in range(n):
        out = out * x2
    return -out


def _grad_scalar(code, param, x):
    if code == 0:
        return x * x * x - x
    if code == 1:
        return -param * x
    if code == 2:
        return -param * ((x > 0) - (x < 0))
    if code == 3:
        return 0.0
    x2 = x * x
    out = x
    for _ in range(int(param)):
        out = out * x2
    return -out


def _crossed_scalar(x, x_new, level, eps, dt_, u):
    arg = (x - level) * (x_new - level) / (eps * dt_)
    return arg < _BRIDGE_CUT and u < math.exp(-arg)


def _crossed(x, x_new, level, eps, dt_, u):
    """Brownian-bridge test for a crossing of ``level`` between two inside points."""
    arg = (x - level) * (x_new - level) / (eps * dt_)
    p = np.where(arg < _BRIDGE_CUT, np.exp(-np.minimum(arg, _BRIDGE_CUT)), 0.0)
    return u < p


def exit_attempts(code, param, a, b, x0, eps, dt, max_steps, bridge, seed, stream, path0, n_paths):
    """Run ``n_paths`` paths from ``x0`` until they leave (a, b).

    Returns ``(steps, side)``; ``side`` is -1 for a, +1 for b and 0 when
    ``max_steps`` ran out.
    """
    st = Stream(seed, stream)
    ids = np.arange(path0, path0 + n_paths, dtype=np.int64)
    x = np.full(n_paths, float(x0))
    steps = np.zeros(n_paths, dtype=np.int64)
    side = np.zeros(n_paths, dtype=np.int8)
    alive = np.arange(n_paths)
    sig = math.sqrt(2.0 * eps * dt)
    k = 0
    while alive.size and k < max_steps:
        xa = x[alive]
        z = st.normals(ids[alive], k)
        xn = xa - grad(code, param, xa) * dt + sig * z
        out_a = xn <= a
        out_b = xn >= b
        if bridge:
            inside = ~(out_a | out_b)
            near = inside & ((xa - a) * (xn - a) < _BRIDGE_CUT * eps * dt) | inside & (
                (b - xa) * (b - xn) < _BRIDGE_CUT * eps * dt)
            if near.any():
                ua, ub = st.uniforms(ids[alive][near], k, BRIDGE)
                ca = _crossed(xa[near], xn[near], a, eps, dt, ua)
                cb = ~ca & _crossed(xa[near], xn[near], b, eps, dt, ub)
                out_a[np.flatnonzero(near)[ca]] = True
                out_b[np.flatnonzero(near)[cb]] = True
        done = out_a | out_b
        x[alive] = xn
        fin = alive[done]
        steps[fin] = k + 1
        side[fin] = np.where(out_a[done], _SIDE_A, _SIDE_B)
        alive = alive[~done]
        k += 1
    steps[alive] = k
    return steps, side


def _interp(tab_lo, tab_step, tab, x):
    n = tab.shape[0]
    pos = (x - tab_lo) / tab_step
    i = np.clip(np.floor(pos), 0, n - 2).astype(np.int64)
    w = pos - i
    return (1.0 - w) * tab[i] + w * tab[i + 1]


def htransform_paths(code, param, a, b, x0, eps, dt, max_steps, bridge, tab_lo, tab_step, tab,
                     singular, max_halvings, seed, stream, path0, n_paths):
    """Conditioned paths with drift ``-V' + 2 eps c(x)`` from ``x0`` until b.

    ``c`` is read from the log table (divided by ``x - a`` when ``singular``).
    A proposal that lands at or below a, or whose drift displacement exceeds
    the distance to a, is redrawn with half the step, down to
    ``dt / 2**max_halvings``; at the floor a crossing is reflected and
    counted.  Returns ``(times, status, floor_hits, proposals)``.
    """
    st = Stream(seed, stream)
    tab = np.asarray(tab, dtype=float)
    ids = np.arange(path0, path0 + n_paths, dtype=np.int64)
    x = np.full(n_paths, float(x0))
    t = np.zeros(n_paths)
    status = np.zeros(n_paths, dtype=np.int8)
    floor_hits = np.zeros(n_paths, dtype=np.int64)
    counter = np.zeros(n_paths, dtype=np.int64)
    alive = np.arange(n_paths)
    while alive.size:
        xa = x[alive]
        corr = np.exp(_interp(tab_lo, tab_step, tab, xa))
        if singular:
            corr = corr / (xa - a)
        drift = -grad(code, param, xa) + 2.0 * eps * corr
        h = np.full(alive.size, float(dt))
        xn = np.empty(alive.size)
        todo = np.arange(alive.size)
        for halving in range(max_halvings + 1):
            idx = alive[todo]
            z = st.normals(ids[idx], counter[idx])
            counter[idx] += 1
            ht = h[todo]
            prop = xa[todo] + drift[todo] * ht + np.sqrt(2.0 * eps * ht) * z
            if singular:
                bad = (prop <= a) | (drift[todo] * ht > xa[todo] - a)
            else:
                bad = np.zeros(todo.size, dtype=bool)
            if halving == max_halvings:
                if singular:
                    cross = prop <= a
                    prop = np.where(cross, 2.0 * a - prop, prop)
                    floor_hits[idx[cross]] += 1
                bad[:] = False
            xn[todo[~bad]] = prop[~bad]
            todo = todo[bad]
            if not todo.size:
                break
            h[todo] *= 0.5
        reached = xn >= b
        if bridge:
            cand = ~reached & ((b - xa) * (b - xn) < _BRIDGE_CUT * eps * h)
            if cand.any():
                ci = np.flatnonzero(cand)
                _, ub = st.uniforms(ids[alive[ci]], counter[alive[ci]] - 1, BRIDGE)
                hit = _crossed(xa[ci], xn[ci], b, eps, h[ci], ub)
                reached[ci[hit]] = True
        x[alive] = xn
        t[alive] += h
        status[alive[reached]] = 1
        alive = alive[~reached]
        alive = alive[counter[alive] < max_steps]
    return t, status, floor_hits, counter


def free_run_paths(code, param, x_start, x_star, y_star, dx, dy, eps, dt, max_steps,
                   seed, stream, path0, n_paths):
    """Free dynamics from ``x_start`` until ``|X - y_star| < dy``.

    Returns ``(t_steps, s_steps, status)`` with ``s_steps`` the last step
    index inside ``|X - x_star| < dx``.
    """
    st = Stream(seed, stream)
    ids = np.arange(path0, path0 + n_paths, dtype=np.int64)
    x = np.full(n_paths, float(x_start))
    t_steps = np.zeros(n_paths, dtype=np.int64)
    s_steps = np.zeros(n_paths, dtype=np.int64)
    status = np.zeros(n_paths, dtype=np.int8)
    alive = np.arange(n_paths)
    sig = math.sqrt(2.0 * eps * dt)
    k = 0
    while alive.size and k < max_steps:
        xa = x[alive]
        xn = xa - grad(code, param, xa) * dt + sig * st.normals(ids[alive], k)
        x[alive] = xn
        k += 1
        in_x = np.abs(xn - x_star) < dx
        s_steps[alive[in_x]] = k
        hit = np.abs(xn - y_star) < dy
        t_steps[alive[hit]] = k
        status[alive[hit]] = 1
        alive = alive[~hit]
    t_steps[alive] = k
    return t_steps, s_steps, status


def segment_path(code, param, lo, hi, x0, eps, dt, max_steps, bridge, seed, stream, path_id,
                 z_buffer=4096):
    """One path from ``x0`` until it leaves (lo, hi), keeping every position.

    Returns ``(path, side)`` where ``path[0] == x0``.
    """
    st = Stream(seed, stream)
    sig = math.sqrt(2.0 * eps * dt)
    out = [np.array([float(x0)])]
    x = float(x0)
    k = 0
    side = 0
    while k < max_steps and side == 0:
        m = min(z_buffer, max_steps - k)
        ks = np.arange(k, k + m, dtype=np.int64)
        z = st.normals(path_id, ks).tolist()
        ua = ub = None
        if bridge:
            ua, ub = (u.tolist() for u in st.uniforms(path_id, ks, BRIDGE))
        buf = np.empty(m)
        j = 0
        while j < m:
            xn = x - _grad_scalar(code, param, x) * dt + sig * z[j]
            buf[j] = xn
            if xn <= lo:
                side = _SIDE_A
            elif xn >= hi:
                side = _SIDE_B
            elif bridge:
                if _crossed_scalar(x, xn, lo, eps, dt, ua[j]):
                    side = _SIDE_A
                elif _crossed_scalar(x, xn, hi, eps, dt, ub[j]):
                    side = _SIDE_B
            x = xn
            j += 1
            if side:
                break
        out.append(buf[:j])
        k += j
    return np.concatenate(out), side


def ratio_sweep(cl, cr, mass, s):
    """``log`` of the pivots of the forward ratio recursion (see exit_laws)."""
    n = len(cl)
    out = np.empty(n)
    t = 1.0
    log = math.log
    cl_ = cl.tolist()
    cr_ = cr.tolist()
    m_ = (s * np.asarray(mass)).tolist()
    for i in range(n):
        num = cl_[i] * t + m_[i]
        den = num + cr_[i]
        out[i] = log(den)
        t = num / den
    return out


def ladder_segments(code, param, lo, hi, x0s, seg_ids, eps, dt, max_steps, bridge, seed, stream):
    """Segments from ``x0s[i]`` on paths ``seg_ids[i]``, keeping running-maximum records.

    Returns ``(side, steps, offsets, rec_k, rec_x)``; records of segment i are
    ``rec_*[offsets[i]:offsets[i+1]]``, start point first, absorbed point excluded.
    """
    st = Stream(seed, stream)
    x = np.array(x0s, dtype=float)
    ids = np.asarray(seg_ids, dtype=np.int64)
    m = x.size
    mx = x.copy()
    side = np.zeros(m, dtype=np.int8)
    steps = np.zeros(m, dtype=np.int64)
    rec_seg = [np.arange(m)]
    rec_k = [np.zeros(m, dtype=np.int64)]
    rec_x = [x.copy()]
    alive = np.arange(m)
    sig = math.sqrt(2.0 * eps * dt)
    k = 0
    while alive.size and k < max_steps:
        xa = x[alive]
        xn = xa - grad(code, param, xa) * dt + sig * st.normals(ids[alive], k)
        out_a = xn <= lo
        out_b = xn >= hi
        if bridge:
            inside = ~(out_a | out_b)
            near = inside & (((xa - lo) * (xn - lo) < _BRIDGE_CUT * eps * dt)
                             | ((hi - xa) * (hi - xn) < _BRIDGE_CUT * eps * dt))
            if near.any():
                ni = np.flatnonzero(near)
                ua, ub = st.uniforms(ids[alive[ni]], k, BRIDGE)
                ca = _crossed(xa[ni], xn[ni], lo, eps, dt, ua)
                cb = ~ca & _crossed(xa[ni], xn[ni], hi, eps, dt, ub)
                out_a[ni[ca]] = True
                out_b[ni[cb]] = True
        k += 1
        done = out_a | out_b
        fin = alive[done]
        steps[fin] = k
        side[fin] = np.where(out_a[done], _SIDE_A, _SIDE_B)
        live = ~done
        alive = alive[live]
        xn = xn[live]
        x[alive] = xn
        up = xn > mx[alive]
        if up.any():
            who = alive[up]
            mx[who] = xn[up]
            rec_seg.append(who)
            rec_k.append(np.full(who.size, k, dtype=np.int64))
            rec_x.append(xn[up])
    steps[alive] = k
    seg = np.concatenate(rec_seg)
    kk = np.concatenate(rec_k)
    xx = np.concatenate(rec_x)
    order = np.lexsort((kk, seg))
    counts = np.bincount(seg, minlength=m)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return side, steps, offsets, kk[order], xx[order]
