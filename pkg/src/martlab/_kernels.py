"""numba kernels for the catalog models.

Each ``*_run`` function simulates one path from an initialised stream state and
writes a fixed summary row into ``out`` (see the ``COL_*`` constants).  When
``record`` is true it also fills the preallocated path buffers; running out of
capacity sets ``COL_OVERFLOW`` and the caller retries with larger buffers.
Recording never consumes random draws, so a recorded path and a terminal-only
run of the same stream agree exactly.
"""
import math

import numba as nb
import numpy as np

from .rng import STATE_SIZE, init_state, next_exponential, next_normal, next_u32, next_uniform

COL_M = 0
COL_END = 1
COL_NJUMP = 2
COL_SUMSQ = 3
COL_SUPNEG = 4
COL_CENSORED = 5
COL_SUPL = 6
COL_NREC = 7
COL_NJREC = 8
COL_OVERFLOW = 9
N_COLS = 10


@nb.njit(cache=True, inline="always")
def _push_point(record, times, vals, conts, k, t, x, xc, out):
    if record:
        if k < times.size:
            times[k] = t
            vals[k] = x
            conts[k] = xc
        else:
            out[COL_OVERFLOW] = 1.0
    return k + 1


@nb.njit(cache=True, inline="always")
def _push_jump(record, jt, js, k, t, z, out):
    if record:
        if k < jt.size:
            jt[k] = t
            js[k] = z
        else:
            out[COL_OVERFLOW] = 1.0
    return k + 1


@nb.njit(cache=True)
def bm_exact_run(st, sigma, a, tmax, out):
    """Exact terminal draw for Brownian motion stopped at level ``a``."""
    out[:] = 0.0
    z = next_normal(st)
    scaled = a / sigma
    tau = scaled * scaled / (z * z)
    u = next_uniform(st)
    out[COL_SUPNEG] = a / u - a
    if tau > tmax:
        out[COL_END] = tmax
        out[COL_CENSORED] = 1.0
        # W_T given max_{s<=T} W_s < a: reject on the bridge non-crossing probability
        v = sigma * sigma * tmax
        sd = math.sqrt(v)
        while True:
            x = sd * next_normal(st)
            if x < a:
                if next_uniform(st) < -math.expm1(-2.0 * a * (a - x) / v):
                    break
        out[COL_M] = x
    else:
        out[COL_END] = tau
        out[COL_M] = a
    return out


@nb.njit(cache=True)
def jd_run(st, sigma, rho, K, a, b, tmax, h, record, times, vals, conts, jt, js, out):
    """Brownian motion plus compensated uniform[-K, K] jumps, stopped outside (-b, a).

    The continuous part moves on the grid ``k*h`` with jump epochs inserted
    exactly; a barrier crossing inside a sub-interval is detected with the
    Brownian-bridge probability.  ``b = inf`` gives the one-sided model.
    """
    out[:] = 0.0
    t = 0.0
    x = 0.0
    xc = 0.0
    s2 = 0.0
    nj = 0
    c_l = rho * K * K / 3.0
    supneg = 0.0
    supl = 0.0
    nrec = _push_point(record, times, vals, conts, 0, 0.0, 0.0, 0.0, out)
    njrec = 0
    t_jump = next_exponential(st, rho) if rho > 0.0 else np.inf
    k = 1
    cell_end = min(h, tmax)
    censored = False
    two_sided = b < np.inf
    while True:
        is_jump = t_jump < cell_end
        target = t_jump if is_jump else cell_end
        dt = target - t
        if sigma > 0.0 and dt > 0.0:
            dw = sigma * math.sqrt(dt) * next_normal(st)
            x1 = x + dw
            hit = 0
            if x1 >= a:
                hit = 1
            elif two_sided and x1 <= -b:
                hit = -1
            else:
                v = sigma * sigma * dt
                eu = -2.0 * (a - x) * (a - x1) / v
                el = -2.0 * (x + b) * (x1 + b) / v if two_sided else -np.inf
                # below exp(-40) the draw cannot matter at double precision
                if eu > -40.0 or el > -40.0:
                    pu = math.exp(eu)
                    pl = math.exp(el)
                    u = next_uniform(st)
                    if u < pu:
                        hit = 1
                    elif u < pu + pl:
                        hit = -1
            if hit != 0:
                level = a if hit == 1 else -b
                xc += level - x
                x = level
                t = target
                supneg = max(supneg, -x)
                supl = max(supl, abs(s2 - c_l * t))
                nrec = _push_point(record, times, vals, conts, nrec, t, x, xc, out)
                break
            xc += dw
            x = x1
        t = target
        supneg = max(supneg, -x)
        if is_jump:
            supl = max(supl, abs(s2 - c_l * t))
            z = K * (2.0 * next_uniform(st) - 1.0)
            x += z
            s2 += z * z
            nj += 1
            supl = max(supl, abs(s2 - c_l * t))
            supneg = max(supneg, -x)
            njrec = _push_jump(record, jt, js, njrec, t, z, out)
            nrec = _push_point(record, times, vals, conts, nrec, t, x, xc, out)
            t_jump = t + next_exponential(st, rho)
            if x >= a or (two_sided and x <= -b):
                break
        else:
            nrec = _push_point(record, times, vals, conts, nrec, t, x, xc, out)
            if t >= tmax:
                censored = True
                break
            k += 1
            cell_end = min(k * h, tmax)
    supl = max(supl, abs(s2 - c_l * t))
    out[COL_M] = x
    out[COL_END] = t
    out[COL_NJUMP] = nj
    out[COL_SUMSQ] = s2
    out[COL_SUPNEG] = supneg
    out[COL_CENSORED] = 1.0 if censored else 0.0
    out[COL_SUPL] = supl
    out[COL_NREC] = nrec
    out[COL_NJREC] = njrec
    return out


@nb.njit(cache=True)
def cp_run(st, rho, a, tmax, max_events, h, record, times, vals, conts, jt, js, out):
    """Compensated unit-jump Poisson process N_t - rho*t stopped once it reaches ``a``.

    Event driven: the path only rises at jump epochs, so stopping is checked
    there.  Jump epochs accumulate with compensated summation.
    """
    out[:] = 0.0
    t = 0.0
    comp = 0.0
    n = 0
    supneg = 0.0
    supl = 0.0
    nrec = _push_point(record, times, vals, conts, 0, 0.0, 0.0, 0.0, out)
    njrec = 0
    g = 1
    censored = False
    m = 0.0
    while True:
        if n >= max_events:
            censored = True
            m = n - rho * t
            break
        e = next_exponential(st, rho)
        y = e - comp
        tn = t + y
        comp = (tn - t) - y
        if tn > tmax:
            if record:
                while g * h < tmax:
                    nrec = _push_point(record, times, vals, conts, nrec, g * h, n - rho * g * h, 0.0, out)
                    g += 1
            t = tmax
            m = n - rho * tmax
            supneg = max(supneg, -m)
            supl = max(supl, abs(m))
            nrec = _push_point(record, times, vals, conts, nrec, t, m, 0.0, out)
            censored = True
            break
        if record:
            while g * h < tn:
                nrec = _push_point(record, times, vals, conts, nrec, g * h, n - rho * g * h, 0.0, out)
                g += 1
        before = n - rho * tn
        supneg = max(supneg, -before)
        supl = max(supl, abs(before))
        n += 1
        m = n - rho * tn
        supl = max(supl, abs(m))
        t = tn
        njrec = _push_jump(record, jt, js, njrec, t, 1.0, out)
        nrec = _push_point(record, times, vals, conts, nrec, t, m, 0.0, out)
        if m >= a:
            break
    out[COL_M] = m
    out[COL_END] = t
    out[COL_NJUMP] = n
    out[COL_SUMSQ] = n
    out[COL_SUPNEG] = supneg
    out[COL_CENSORED] = 1.0 if censored else 0.0
    out[COL_SUPL] = supl
    out[COL_NREC] = nrec
    out[COL_NJREC] = njrec
    return out


@nb.njit(cache=True)
def rw_run(st, a, nmax, record, times, vals, conts, jt, js, out):
    """Symmetric +-1 walk at integer times, stopped at the first visit to ``a``.

    One random bit per step; 32 steps per stream word.
    """
    out[:] = 0.0
    s = 0
    n = 0
    mins = 0
    w = np.uint64(0)
    nbits = 0
    nrec = _push_point(record, times, vals, conts, 0, 0.0, 0.0, 0.0, out)
    njrec = 0
    censored = False
    one = np.uint64(1)
    while s < a:
        if n >= nmax:
            censored = True
            break
        if nbits == 0:
            w = next_u32(st)
            nbits = 32
        step = 1 if w & one else -1
        s += step
        if s < mins:
            mins = s
        w >>= one
        nbits -= 1
        n += 1
        if record:
            njrec = _push_jump(record, jt, js, njrec, float(n), float(step), out)
            nrec = _push_point(record, times, vals, conts, nrec, float(n), float(s), 0.0, out)
    out[COL_M] = s
    out[COL_END] = n
    out[COL_NJUMP] = n
    out[COL_SUMSQ] = n
    out[COL_SUPNEG] = -mins
    out[COL_CENSORED] = 1.0 if censored else 0.0
    out[COL_NREC] = nrec
    out[COL_NJREC] = njrec
    return out


@nb.njit(cache=True, nogil=True)
def bm_exact_batch(master, start, sigma, a, tmax, out):
    st = np.empty(STATE_SIZE, dtype=np.uint64)
    for i in range(out.shape[0]):
        init_state(st, master, np.uint64(start + i))
        bm_exact_run(st, sigma, a, tmax, out[i])


@nb.njit(cache=True, nogil=True)
def jd_batch(master, start, sigma, rho, K, a, b, tmax, h, out):
    st = np.empty(STATE_SIZE, dtype=np.uint64)
    e = np.empty(0)
    for i in range(out.shape[0]):
        init_state(st, master, np.uint64(start + i))
        jd_run(st, sigma, rho, K, a, b, tmax, h, False, e, e, e, e, e, out[i])


@nb.njit(cache=True, nogil=True)
def cp_batch(master, start, rho, a, tmax, max_events, out):
    st = np.empty(STATE_SIZE, dtype=np.uint64)
    e = np.empty(0)
    for i in range(out.shape[0]):
        init_state(st, master, np.uint64(start + i))
        cp_run(st, rho, a, tmax, max_events, 1.0, False, e, e, e, e, e, out[i])


@nb.njit(cache=True, nogil=True)
def rw_batch(master, start, a, nmax, out):
    st = np.empty(STATE_SIZE, dtype=np.uint64)
    e = np.empty(0)
    for i in range(out.shape[0]):
        init_state(st, master, np.uint64(start + i))
        rw_run(st, a, nmax, False, e, e, e, e, e, out[i])
