# cython: language_level=3
"""Compiled simulation kernels.

Same algorithms and the same Philox counter layout as ``_kernels_py``; each
path runs sequentially in C with the GIL released.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, log1p, exp, cos, sin, floor
from libc.stdint cimport uint32_t, uint64_t, int64_t, int8_t
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

NAME = "cython"

cdef uint32_t M0 = 0xD2511F53
cdef uint32_t M1 = 0xCD9E8D57
cdef uint32_t W0 = 0x9E3779B9
cdef uint32_t W1 = 0xBB67AE85
cdef double TWO_PI = 6.283185307179586
cdef double BRIDGE_CUT = 40.0
cdef uint32_t P_NORMAL = 0
cdef uint32_t P_BRIDGE = 1


cdef inline void philox(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                        uint32_t k0, uint32_t k1, uint32_t* out) noexcept nogil:
    cdef uint64_t p0, p1
    cdef int r
    for r in range(10):
        p0 = <uint64_t>M0 * c0
        p1 = <uint64_t>M1 * c2
        c0 = <uint32_t>(p1 >> 32) ^ c1 ^ k0
        c1 = <uint32_t>p1
        c2 = <uint32_t>(p0 >> 32) ^ c3 ^ k1
        c3 = <uint32_t>p0
        k0 = k0 + W0
        k1 = k1 + W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline double unit(uint32_t hi, uint32_t lo) noexcept nogil:
    return ((hi >> 5) * 67108864.0 + (lo >> 6)) * (1.0 / 9007199254740992.0)


cdef struct Gauss:
    uint32_t k0
    uint32_t k1
    uint32_t path
    uint32_t stream
    double cached


cdef inline double normal(Gauss* g, int64_t step) noexcept nogil:
    """Normal number ``step`` of the path; odd steps reuse the sine half."""
    cdef uint32_t w[4]
    cdef double r, th
    if step & 1:
        if g.cached == g.cached:
            return g.cached
    philox(<uint32_t>(step >> 1), g.path, g.stream, P_NORMAL, g.k0, g.k1, w)
    r = sqrt(-2.0 * log1p(-unit(w[0], w[1])))
    th = TWO_PI * unit(w[2], w[3])
    if step & 1:
        g.cached = 0.0 / 0.0
        return r * sin(th)
    g.cached = r * sin(th)
    return r * cos(th)


cdef inline void bridge_uniforms(Gauss* g, int64_t index, double* ua, double* ub) noexcept nogil:
    cdef uint32_t w[4]
    philox(<uint32_t>index, g.path, g.stream, P_BRIDGE, g.k0, g.k1, w)
    ua[0] = unit(w[0], w[1])
    ub[0] = unit(w[2], w[3])


cdef inline double grad(int code, double p, double x) noexcept nogil:
    cdef double x2, out
    cdef int i, n
    if code == 0:
        return x * x * x - x
    if code == 1:
        return -p * x
    if code == 2:
        return -p * ((x > 0) - (x < 0))
    if code == 3:
        return 0.0
    n = <int>p
    x2 = x * x
    out = x
    for i in range(n):
        out = out * x2
    return -out


cdef inline double cross_prob(double x, double xn, double level, double eps, double h) noexcept nogil:
    cdef double arg = (x - level) * (xn - level) / (eps * h)
    if arg < BRIDGE_CUT:
        return exp(-arg)
    return 0.0


cdef inline void init_gauss(Gauss* g, uint64_t seed, int64_t stream, int64_t path) noexcept nogil:
    g.k0 = <uint32_t>seed
    g.k1 = <uint32_t>(seed >> 32)
    g.path = <uint32_t>path
    g.stream = <uint32_t>stream
    g.cached = 0.0 / 0.0


def exit_attempts(int code, double param, double a, double b, double x0, double eps, double dt,
                  int64_t max_steps, bint bridge, uint64_t seed, int64_t stream, int64_t path0,
                  int64_t n_paths):
    cdef cnp.ndarray[int64_t, ndim=1] steps_arr = np.zeros(n_paths, dtype=np.int64)
    cdef cnp.ndarray[int8_t, ndim=1] side_arr = np.zeros(n_paths, dtype=np.int8)
    cdef int64_t[:] steps = steps_arr
    cdef int8_t[:] side = side_arr
    cdef double sig = sqrt(2.0 * eps * dt)
    cdef double x, xn, ua, ub
    cdef int64_t i, k
    cdef int8_t sd
    cdef Gauss g
    with nogil:
        for i in range(n_paths):
            init_gauss(&g, seed, stream, path0 + i)
            x = x0
            sd = 0
            k = 0
            while k < max_steps:
                xn = x - grad(code, param, x) * dt + sig * normal(&g, k)
                if xn <= a:
                    sd = -1
                elif xn >= b:
                    sd = 1
                elif bridge and ((x - a) * (xn - a) < BRIDGE_CUT * eps * dt
                                 or (b - x) * (b - xn) < BRIDGE_CUT * eps * dt):
                    bridge_uniforms(&g, k, &ua, &ub)
                    if ua < cross_prob(x, xn, a, eps, dt):
                        sd = -1
                    elif ub < cross_prob(x, xn, b, eps, dt):
                        sd = 1
                x = xn
                k += 1
                if sd != 0:
                    break
            steps[i] = k
            side[i] = sd
    return steps_arr, side_arr


def htransform_paths(int code, double param, double a, double b, double x0, double eps, double dt,
                     int64_t max_steps, bint bridge, double tab_lo, double tab_step, tab,
                     bint singular, int max_halvings, uint64_t seed, int64_t stream, int64_t path0,
                     int64_t n_paths):
    cdef double[:] table = np.ascontiguousarray(tab, dtype=np.float64)
    cdef int64_t n_tab = table.shape[0]
    cdef cnp.ndarray[double, ndim=1] t_arr = np.zeros(n_paths)
    cdef cnp.ndarray[int8_t, ndim=1] st_arr = np.zeros(n_paths, dtype=np.int8)
    cdef cnp.ndarray[int64_t, ndim=1] fl_arr = np.zeros(n_paths, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] ct_arr = np.zeros(n_paths, dtype=np.int64)
    cdef double[:] times = t_arr
    cdef int8_t[:] status = st_arr
    cdef int64_t[:] floors = fl_arr
    cdef int64_t[:] counters = ct_arr
    cdef double x, xn, h, t, drift, corr, pos, w, ua, ub
    cdef int64_t i, j, counter, nfloor
    cdef int halving
    cdef bint bad, done
    cdef Gauss g
    with nogil:
        for i in range(n_paths):
            init_gauss(&g, seed, stream, path0 + i)
            x = x0
            t = 0.0
            counter = 0
            nfloor = 0
            done = False
            while not done and counter < max_steps:
                pos = (x - tab_lo) / tab_step
                j = <int64_t>floor(pos)
                if j < 0:
                    j = 0
                elif j > n_tab - 2:
                    j = n_tab - 2
                w = pos - j
                corr = exp((1.0 - w) * table[j] + w * table[j + 1])
                if singular:
                    corr = corr / (x - a)
                drift = -grad(code, param, x) + 2.0 * eps * corr
                h = dt
                halving = 0
                while True:
                    xn = x + drift * h + sqrt(2.0 * eps * h) * normal(&g, counter)
                    counter += 1
                    bad = singular and (xn <= a or drift * h > x - a)
                    if halving == max_halvings:
                        if singular and xn <= a:
                            xn = 2.0 * a - xn
                            nfloor += 1
                        bad = False
                    if not bad:
                        break
                    h = 0.5 * h
                    halving += 1
                if xn >= b:
                    done = True
                elif bridge and (b - x) * (b - xn) < BRIDGE_CUT * eps * h:
                    bridge_uniforms(&g, counter - 1, &ua, &ub)
                    if ub < cross_prob(x, xn, b, eps, h):
                        done = True
                x = xn
                t += h
            times[i] = t
            status[i] = 1 if done else 0
            floors[i] = nfloor
            counters[i] = counter
    return t_arr, st_arr, fl_arr, ct_arr


def free_run_paths(int code, double param, double x_start, double x_star, double y_star,
                   double dx, double dy, double eps, double dt, int64_t max_steps, uint64_t seed,
                   int64_t stream, int64_t path0, int64_t n_paths):
    cdef cnp.ndarray[int64_t, ndim=1] t_arr = np.zeros(n_paths, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] s_arr = np.zeros(n_paths, dtype=np.int64)
    cdef cnp.ndarray[int8_t, ndim=1] st_arr = np.zeros(n_paths, dtype=np.int8)
    cdef int64_t[:] t_steps = t_arr
    cdef int64_t[:] s_steps = s_arr
    cdef int8_t[:] status = st_arr
    cdef double sig = sqrt(2.0 * eps * dt)
    cdef double x, d
    cdef int64_t i, k, last
    cdef int8_t hit
    cdef Gauss g
    with nogil:
        for i in range(n_paths):
            init_gauss(&g, seed, stream, path0 + i)
            x = x_start
            k = 0
            last = 0
            hit = 0
            while k < max_steps:
                x = x - grad(code, param, x) * dt + sig * normal(&g, k)
                k += 1
                d = x - x_star
                if -dx < d < dx:
                    last = k
                d = x - y_star
                if -dy < d < dy:
                    hit = 1
                    break
            t_steps[i] = k
            s_steps[i] = last
            status[i] = hit
    return t_arr, s_arr, st_arr


def segment_path(int code, double param, double lo, double hi, double x0, double eps, double dt,
                 int64_t max_steps, bint bridge, uint64_t seed, int64_t stream, int64_t path_id,
                 int64_t z_buffer=4096):
    cdef int64_t cap = z_buffer if z_buffer < max_steps + 1 else max_steps + 1
    cdef cnp.ndarray[double, ndim=1] arr = np.empty(cap)
    cdef double[:] buf = arr
    cdef double sig = sqrt(2.0 * eps * dt)
    cdef double x = x0, xn, ua, ub
    cdef int64_t k = 0
    cdef int side = 0
    cdef Gauss g
    init_gauss(&g, seed, stream, path_id)
    buf[0] = x0
    while k < max_steps and side == 0:
        with nogil:
            while k < max_steps and k + 1 < cap:
                xn = x - grad(code, param, x) * dt + sig * normal(&g, k)
                if xn <= lo:
                    side = -1
                elif xn >= hi:
                    side = 1
                elif bridge and ((x - lo) * (xn - lo) < BRIDGE_CUT * eps * dt
                                 or (hi - x) * (hi - xn) < BRIDGE_CUT * eps * dt):
                    bridge_uniforms(&g, k, &ua, &ub)
                    if ua < cross_prob(x, xn, lo, eps, dt):
                        side = -1
                    elif ub < cross_prob(x, xn, hi, eps, dt):
                        side = 1
                x = xn
                k += 1
                buf[k] = x
                if side != 0:
                    break
        if side == 0 and k < max_steps:
            cap = min(2 * cap, max_steps + 1)
            new = np.empty(cap)
            new[:k + 1] = arr[:k + 1]
            arr = new
            buf = arr
    return arr[:k + 1].copy(), side


def ratio_sweep(cl, cr, mass, double s):
    cdef double[:] l = np.ascontiguousarray(cl, dtype=np.float64)
    cdef double[:] r = np.ascontiguousarray(cr, dtype=np.float64)
    cdef double[:] m = np.ascontiguousarray(mass, dtype=np.float64)
    cdef int64_t n = l.shape[0], i
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(n)
    cdef double[:] out = out_arr
    cdef double t = 1.0, num, den
    with nogil:
        for i in range(n):
            num = l[i] * t + s * m[i]
            den = num + r[i]
            out[i] = log(den)
            t = num / den
    return out_arr


cdef struct Records:
    int64_t* k
    double* x
    int64_t n
    int64_t cap


cdef inline int push_record(Records* r, int64_t k, double x) noexcept nogil:
    cdef int64_t* nk
    cdef double* nx
    if r.n == r.cap:
        nk = <int64_t*>realloc(r.k, 2 * r.cap * sizeof(int64_t))
        nx = <double*>realloc(r.x, 2 * r.cap * sizeof(double))
        if nk == NULL or nx == NULL:
            return -1
        r.k = nk
        r.x = nx
        r.cap = 2 * r.cap
    r.k[r.n] = k
    r.x[r.n] = x
    r.n += 1
    return 0


def ladder_segments(int code, double param, double lo, double hi, x0s, seg_ids, double eps,
                    double dt, int64_t max_steps, bint bridge, uint64_t seed, int64_t stream):
    """Segments from ``x0s[i]`` on paths ``seg_ids[i]``, keeping running-maximum records.

    Returns ``(side, steps, offsets, rec_k, rec_x)``; records of segment i are
    ``rec_*[offsets[i]:offsets[i+1]]``, start point first, absorbed point excluded.
    """
    cdef double[:] xs = np.ascontiguousarray(x0s, dtype=np.float64)
    cdef int64_t[:] ids = np.ascontiguousarray(seg_ids, dtype=np.int64)
    cdef int64_t m = xs.shape[0]
    cdef cnp.ndarray[int8_t, ndim=1] side_arr = np.zeros(m, dtype=np.int8)
    cdef cnp.ndarray[int64_t, ndim=1] steps_arr = np.zeros(m, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] off_arr = np.zeros(m + 1, dtype=np.int64)
    cdef int8_t[:] side = side_arr
    cdef int64_t[:] steps = steps_arr
    cdef int64_t[:] offsets = off_arr
    cdef double sig = sqrt(2.0 * eps * dt)
    cdef double x, xn, mx, ua, ub
    cdef int64_t i, k
    cdef int8_t sd
    cdef int fail = 0
    cdef Gauss g
    cdef Records rec
    rec.cap = 1024
    rec.n = 0
    rec.k = <int64_t*>malloc(rec.cap * sizeof(int64_t))
    rec.x = <double*>malloc(rec.cap * sizeof(double))
    if rec.k == NULL or rec.x == NULL:
        free(rec.k)
        free(rec.x)
        raise MemoryError()
    with nogil:
        for i in range(m):
            offsets[i] = rec.n
            init_gauss(&g, seed, stream, ids[i])
            x = xs[i]
            mx = x
            fail |= push_record(&rec, 0, x)
            k = 0
            sd = 0
            while k < max_steps:
                xn = x - grad(code, param, x) * dt + sig * normal(&g, k)
                if xn <= lo:
                    sd = -1
                elif xn >= hi:
                    sd = 1
                elif bridge and ((x - lo) * (xn - lo) < BRIDGE_CUT * eps * dt
                                 or (hi - x) * (hi - xn) < BRIDGE_CUT * eps * dt):
                    bridge_uniforms(&g, k, &ua, &ub)
                    if ua < cross_prob(x, xn, lo, eps, dt):
                        sd = -1
                    elif ub < cross_prob(x, xn, hi, eps, dt):
                        sd = 1
                k += 1
                if sd != 0:
                    break
                x = xn
                if x > mx:
                    mx = x
                    fail |= push_record(&rec, k, x)
            steps[i] = k
            side[i] = sd
        offsets[m] = rec.n
    try:
        if fail:
            raise MemoryError()
        rk = np.empty(rec.n, dtype=np.int64)
        rx = np.empty(rec.n)
        for i in range(rec.n):
            rk[i] = rec.k[i]
            rx[i] = rec.x[i]
    finally:
        free(rec.k)
        free(rec.x)
    return side_arr, steps_arr, off_arr, rk, rx
