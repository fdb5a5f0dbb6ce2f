"""Hot-path kernels, compiled with numba when available.

Set ``LKSIM_DISABLE_NUMBA=1`` (or uninstall numba) to select the pure-numpy
fallback implementations. Both backends consume the same pre-drawn increment
arrays and accumulate sums in the same order, so path values, flip indices,
stop decisions and jump placement are bit-identical across backends. The one
exception is the |x|^(-alpha) clock accumulator: numpy's vectorized pow and
scalar libm pow can disagree by 1 ulp, so clock values agree only to a few
ulp (asserted in tests). ``benchmarks/bench_kernels.py`` compares speed.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


USE_NUMBA = HAS_NUMBA and not os.environ.get("LKSIM_DISABLE_NUMBA")

# value used to repair exact floating-point zeros on a path; smallest positive
# double, far below any stop floor so it never feeds a |x|^(-alpha) term
_TINY = 5e-324

# walk stop codes
RAN_OUT = 0      # consumed the whole increment block
HIT_FLOOR = 1    # |x| fell below the stop floor
FLIP_CAP = 2     # flip output buffer filled
HORIZON = 3      # running time reached t_max


def _walk_flips_loop(x0, inc, dt, alpha, stop_floor, idx_out, xb_out, xa_out, nu_out):
    # sequential reference: one step per increment, flips recorded with the
    # local exclusive nu partial sum (caller adds the running carry)
    x = x0
    disp = 0.0  # raw displacement; x0 added per step so sums associate as cumsum
    nu_acc = 0.0
    m = 0
    cap = idx_out.shape[0]
    n = inc.shape[0]
    k = 0
    code = RAN_OUT
    while k < n:
        disp += inc[k]
        x_new = x0 + disp
        if x_new == 0.0:
            x_new = _TINY if x > 0.0 else -_TINY
        if (x > 0.0) != (x_new > 0.0):
            idx_out[m] = k
            xb_out[m] = x
            xa_out[m] = x_new
            nu_out[m] = nu_acc
            m += 1
        nu_acc += abs(x) ** (-alpha) * dt
        x = x_new
        k += 1
        if abs(x) < stop_floor:
            code = HIT_FLOOR
            break
        if m >= cap:
            code = FLIP_CAP
            break
    return m, k, x, nu_acc, code


_walk_flips_numba = njit(cache=True, nogil=True)(_walk_flips_loop)


def _walk_flips_numpy(x0, inc, dt, alpha, stop_floor, idx_out, xb_out, xa_out, nu_out):
    # vectorized twin of _walk_flips_loop; np.cumsum accumulates sequentially
    # so partial sums match the loop bit for bit
    if inc.shape[0] == 0:
        return 0, 0, float(x0), 0.0, RAN_OUT
    x_path = x0 + np.cumsum(inc)
    zeros = np.nonzero(x_path == 0.0)[0]
    if zeros.size:
        left = np.concatenate(([x0], x_path[:-1]))
        for i in zeros:  # measure-zero event, plain loop is fine
            prev = left[i]
            j = i
            while prev == 0.0 and j > 0:
                j -= 1
                prev = left[j]
            x_path[i] = _TINY if prev > 0.0 else -_TINY
    left = np.concatenate(([x0], x_path[:-1]))
    pos_l = left > 0.0
    pos_r = x_path > 0.0
    flip_at = np.nonzero(pos_l != pos_r)[0]

    with np.errstate(over="ignore"):  # scalar libm pow infs silently too
        powers = np.abs(left) ** (-alpha) * dt
    incl = np.cumsum(powers)
    excl = np.concatenate(([0.0], incl[:-1]))

    n = inc.shape[0]
    cap = idx_out.shape[0]
    floor_hits = np.nonzero(np.abs(x_path) < stop_floor)[0]
    floor_k = int(floor_hits[0]) if floor_hits.size else n
    cap_k = int(flip_at[cap - 1]) if flip_at.size >= cap else n

    if floor_k <= cap_k and floor_k < n:
        code = HIT_FLOOR
        last = floor_k
    elif cap_k < n:
        code = FLIP_CAP
        last = cap_k
    else:
        code = RAN_OUT
        last = n - 1
    flip_at = flip_at[flip_at <= last]
    m = flip_at.shape[0]
    idx_out[:m] = flip_at
    xb_out[:m] = left[flip_at]
    xa_out[:m] = x_path[flip_at]
    nu_out[:m] = excl[flip_at]
    return m, last + 1, float(x_path[last]), float(incl[last]), code


def _walk_flips_scaled_loop(x0, s, dt0, kappa, alpha, t_max, floor,
                            idx_out, xb_out, xa_out, th_out):
    # magnitude-scaled steps: step k lasts dt0*|x|^alpha and the increment is
    # kappa*|x|*s[k] with s a unit-time strictly stable draw, so every step
    # advances the |x|^(-alpha) clock by exactly dt0 and the increment law is
    # exact for the step taken.  Flips are recorded with the time of the left
    # grid point of the straddling interval; floor is checked before a step,
    # t_max stops at the first grid point whose time reaches it (value read
    # there, one flip on the crossing step still recorded).
    x = x0
    t = 0.0
    m = 0
    repairs = 0
    cap = idx_out.shape[0]
    n = s.shape[0]
    k = 0
    code = RAN_OUT
    while k < n:
        ax = x if x > 0.0 else -x
        if ax < floor:
            code = HIT_FLOOR
            break
        r = 1.0 + (kappa if x > 0.0 else -kappa) * s[k]
        x_new = x * r
        if x_new == 0.0:
            x_new = _TINY if x > 0.0 else -_TINY
            repairs += 1
        if (x > 0.0) != (x_new > 0.0):
            idx_out[m] = k
            xb_out[m] = x
            xa_out[m] = x_new
            th_out[m] = t
            m += 1
        t += ax ** alpha * dt0
        x = x_new
        k += 1
        if t >= t_max:
            code = HORIZON
            break
        if m >= cap:
            code = FLIP_CAP
            break
    return m, k, x, t, repairs, code


_walk_flips_scaled_numba = njit(cache=True, nogil=True)(_walk_flips_scaled_loop)


def _walk_flips_scaled_numpy(x0, s, dt0, kappa, alpha, t_max, floor,
                             idx_out, xb_out, xa_out, th_out):
    # run-vectorized twin: between sign events the ratio recurrence
    # x_{k+1} = x_k * r_k is a cumprod, and prepending the carry value makes
    # cumprod/cumsum associate exactly like the sequential loop.  Only the
    # time accumulator can drift by a few ulp (vectorized pow), which in
    # knife-edge cases may shift a t_max stop by one grid point.
    x = float(x0)
    t = 0.0
    m = 0
    repairs = 0
    cap = idx_out.shape[0]
    n = s.shape[0]
    k = 0
    big = n + 1
    while k < n:
        ax = abs(x)
        if ax < floor:
            return m, k, x, t, repairs, HIT_FLOOR
        r = 1.0 + (kappa if x > 0.0 else -kappa) * s[k:min(n, k + 65536)]
        neg = np.nonzero(r <= 0.0)[0]
        e = int(neg[0]) if neg.size else r.shape[0] - 1
        kind = 1 if neg.size else 2  # 1 flip/zero event, 2 chunk end
        vals = np.cumprod(np.concatenate(((x,), r[: e + 1])))[1:]
        under = np.nonzero(vals == 0.0)[0]
        if under.size and under[0] <= e:
            e = int(under[0])
            kind = 0  # exact zero (measure theory says rounding), repair it
            vals = vals[: e + 1]
        left = np.concatenate(((x,), vals[:e]))
        terms = np.abs(left) ** alpha * dt0
        tp = np.cumsum(np.concatenate(((t,), terms)))[1:]
        viol = np.nonzero(np.abs(left[1:]) < floor)[0]
        f = int(viol[0]) + 1 if viol.size else big
        hz = np.nonzero(tp >= t_max)[0]
        h = int(hz[0]) if hz.size else big
        if f <= e and f <= h:
            return m, k + f, float(left[f]), float(tp[f - 1]), repairs, HIT_FLOOR
        if h <= e:
            if h == e and kind != 2:
                x_new = float(vals[e])
                if kind == 0:
                    x_new = _TINY if x > 0.0 else -_TINY
                    repairs += 1
                elif m < cap:
                    idx_out[m] = k + e
                    xb_out[m] = float(left[e])
                    xa_out[m] = x_new
                    th_out[m] = float(tp[e - 1]) if e > 0 else t
                    m += 1
            else:
                x_new = float(vals[h])
            return m, k + h + 1, x_new, float(tp[h]), repairs, HORIZON
        if kind == 1:
            x_new = float(vals[e])
            idx_out[m] = k + e
            xb_out[m] = float(left[e])
            xa_out[m] = x_new
            th_out[m] = float(tp[e - 1]) if e > 0 else t
            m += 1
            x = x_new
            t = float(tp[e])
            k += e + 1
            if m >= cap:
                return m, k, x, t, repairs, FLIP_CAP
        elif kind == 0:
            x = _TINY if x > 0.0 else -_TINY
            repairs += 1
            t = float(tp[e])
            k += e + 1
        else:
            x = float(vals[e])
            t = float(tp[e])
            k += e + 1
    return m, k, x, t, repairs, RAN_OUT


def _cms_transform_loop(u, w, alpha, theta0):
    # Chambers-Mallows-Stuck transform of pre-drawn (uniform angle, unit
    # exponential) pairs into unit-scale strictly stable variates; the host
    # draws u and w so the rng stream is backend-independent.  libm and
    # numpy trig differ by an ulp or two, so the two implementations agree
    # only to ~1e-14 relative (asserted in tests), unlike the bit-exact path
    # kernels.  The compiled loop is pow-bound and measures *slower* than the
    # vectorized expression (17 vs 24 M/s here), so the dispatch below always
    # picks numpy; the loop stays for the benchmark comparison.
    a = alpha
    ia = 1.0 / a
    ea = (1.0 - a) * ia
    c0 = math.cos(a * theta0) ** ia
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = (math.sin(a * (theta0 + u[i])) / (c0 * math.cos(u[i]) ** ia)
                  * (math.cos(a * theta0 + (a - 1.0) * u[i]) / w[i]) ** ea)
    return out


_cms_transform_numba = njit(cache=True, nogil=True)(_cms_transform_loop)


def _cms_transform_numpy(u, w, alpha, theta0):
    a = alpha
    return (np.sin(a * (theta0 + u)) / (math.cos(a * theta0) * np.cos(u)) ** (1.0 / a)
            * (np.cos(a * theta0 + (a - 1.0) * u) / w) ** ((1.0 - a) / a))


def _segment_exp_integral_loop(values, times, alpha):
    # step-rule integral of exp(alpha * value) over [times[0], times[-1]]
    acc = 0.0
    for i in range(times.shape[0] - 1):
        acc += np.exp(alpha * values[i]) * (times[i + 1] - times[i])
    return acc


_segment_exp_integral_numba = njit(cache=True, nogil=True)(_segment_exp_integral_loop)


def _segment_exp_integral_numpy(values, times, alpha):
    if times.shape[0] < 2:
        return 0.0
    terms = np.exp(alpha * values[:-1]) * np.diff(times)
    return float(np.cumsum(terms)[-1])


# log-position clamp for the marginal walk; exp(340) squared is still finite,
# so bounded test functions evaluate cleanly even on astronomic excursions
_LOG_CAP = 340.0


def _lk_marginal_loop(x0, t_target, alpha, seg, wp_edge, wn_pow, steps,
                      step_cap, z, e, u, out):
    """Event-driven walk of the two-segment log path read at self-similar
    time t_target, one path per slot of out.

    seg rows are indexed by sign ((s+1)/2) and hold [drift, sigma, lam_pos,
    lam_neg, q]: the effective small-scale drift, the Gaussian scale of the
    sub-threshold jumps, the two one-sided big-jump rates and the flip rate,
    all per unit of multiplicative time.  Big jumps and flips run on exact
    exponential clocks; between events the path advances on a micro grid of
    the nominal window (t_target |x0|^-alpha) / steps, and the self-similar
    clock accrues exp(alpha w) with the left state, so every discretization
    error is O(t_target / steps) and extrapolates with the horizon.  Big-jump
    sizes invert the exact one-sided tails of the segment measure in the
    e^y - 1 coordinate (wp_edge and wn_pow encode the threshold), the flip
    size inverts the log-Pareto law.  Paths still short of t_target after
    step_cap sub-steps keep their current value (their clock has all but
    converged: the hitting time of zero was reached first).

    Consumes the pre-drawn pools z (normals), e (unit exponentials) and
    u (uniforms) strictly in path order and stops before a path that could
    exhaust them; returns (paths_done, z_used, e_used, u_used).
    """
    n = out.shape[0]
    cz = 0
    ce = 0
    cu = 0
    need_z = step_cap + 2
    need_e = 2 * step_cap + 4
    need_u = 2 * step_cap + 4
    xa = abs(x0) ** alpha
    ia = 1.0 / alpha
    delta = t_target * abs(x0) ** (-alpha) / steps
    si0 = 1 if x0 > 0.0 else 0
    i = 0
    while i < n:
        if (cz + need_z > z.shape[0] or ce + need_e > e.shape[0]
                or cu + need_u > u.shape[0]):
            break
        si = si0
        w = 0.0
        t_run = 0.0
        nu = 0.0
        lam = seg[si, 2] + seg[si, 3]
        tf = e[ce] / seg[si, 4]
        ce += 1
        tj = e[ce] / lam
        ce += 1
        grid = delta
        nsub = 0
        while nsub < step_cap:
            tb = grid
            ev = 0
            if tj < tb:
                tb = tj
                ev = 1
            if tf < tb:
                tb = tf
                ev = 2
            dn = tb - nu
            t_run += xa * math.exp(alpha * w) * dn
            w += seg[si, 0] * dn + seg[si, 1] * math.sqrt(dn) * z[cz]
            cz += 1
            nu = tb
            nsub += 1
            if t_run >= t_target:
                break
            if ev == 1:
                take_pos = u[cu] * lam < seg[si, 2]
                cu += 1
                v = u[cu]
                cu += 1
                if take_pos:
                    w += math.log1p(wp_edge * (1.0 - v) ** (-ia))
                else:
                    w += math.log1p(-(wn_pow - v * (wn_pow - 1.0)) ** (-ia))
                tj = nu + e[ce] / lam
                ce += 1
            elif ev == 2:
                v = u[cu]
                cu += 1
                if v < 1e-300:
                    v = 1e-300
                w += math.log((1.0 - v) ** (-ia) - 1.0)
                si = 1 - si
                lam = seg[si, 2] + seg[si, 3]
                tf = nu + e[ce] / seg[si, 4]
                ce += 1
                tj = nu + e[ce] / lam
                ce += 1
            else:
                grid += delta
            if w > _LOG_CAP:
                w = _LOG_CAP
            elif w < -_LOG_CAP:
                w = -_LOG_CAP
        out[i] = (1.0 if si == 1 else -1.0) * abs(x0) * math.exp(w)
        i += 1
    return i, cz, ce, cu


_lk_marginal_numba = njit(cache=True, nogil=True)(_lk_marginal_loop)

# event-driven control flow resists vectorization; the numpy backend for this
# kernel is the uncompiled loop, bit-identical by construction and only meant
# for small n (tests, debugging)
_lk_marginal_numpy = _lk_marginal_loop


def _place_jumps_loop(cells, sizes, n_cells):
    out = np.zeros(n_cells)
    for i in range(cells.shape[0]):
        out[cells[i]] += sizes[i]
    return out


_place_jumps_numba = njit(cache=True, nogil=True)(_place_jumps_loop)


def _place_jumps_numpy(cells, sizes, n_cells):
    return np.bincount(cells, weights=sizes, minlength=n_cells).astype(np.float64)


if USE_NUMBA:
    walk_flips = _walk_flips_numba
    walk_flips_scaled = _walk_flips_scaled_numba
    segment_exp_integral = _segment_exp_integral_numba
    place_jumps = _place_jumps_numba
    lk_marginal = _lk_marginal_numba
else:
    walk_flips = _walk_flips_numpy
    walk_flips_scaled = _walk_flips_scaled_numpy
    segment_exp_integral = _segment_exp_integral_numpy
    place_jumps = _place_jumps_numpy
    lk_marginal = _lk_marginal_numpy

cms_transform = _cms_transform_numpy  # numpy wins on this one, see above


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
