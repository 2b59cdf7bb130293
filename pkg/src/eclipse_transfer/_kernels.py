"""Compiled inner loops: augmented right-hand side, DOP853 step, eclipse events.

Everything here works on flat float64 arrays so numba can compile it.  The
public modules wrap these with dataclasses and input validation.

Parameter vector layout (``p``)::

    [gm, earth_radius, alpha0, omega_sun, thrust, ve, eclipses_enabled]

Augmented state layout (``s``)::

    [x, y, vx, vy, m, px, py, pvx, pvy, pm]

The thrust flag ``eps`` and time ``t`` travel alongside ``s``.
"""
import math

import numpy as np
from numba import njit

from eclipse_transfer._tableau import A as _A, B as _B, E3 as _E3, E5 as _E5, N_STAGES

GM, RE, ALPHA0, OMEGA_S, THRUST, VE, ECLIPSES = range(7)
N_PARAMS = 7

X, Y, VX, VY, M, PX, PY, PVX, PVY, PM = range(10)
N_STATE = 10

STOP_PERIGEE = 0
STOP_MAX_TIME = 1
STOP_ERROR = 2

ERR_NONE = 0
ERR_IMPACT = 1
ERR_NONFINITE = 2
ERR_GRAZING = 3
ERR_DEGENERATE = 4

GRAZING_RATE = 1e-6  # m/s
GUARD_SAMPLES = 4



@njit(cache=True, nogil=True)
def sun_angle(p, t):
    return p[ALPHA0] + p[OMEGA_S] * t


@njit(cache=True, nogil=True)
def shadow_constraint(p, x, y, t):
    a = sun_angle(p, t)
    return x * math.sin(a) - y * math.cos(a)


@njit(cache=True, nogil=True)
def shadow_constraint_rate(p, x, y, vx, vy, t):
    a = sun_angle(p, t)
    sa = math.sin(a)
    ca = math.cos(a)
    return p[OMEGA_S] * (x * ca + y * sa) + vx * sa - vy * ca


@njit(cache=True, nogil=True)
def in_shadow(p, x, y, t):
    a = sun_angle(p, t)
    sa = math.sin(a)
    ca = math.cos(a)
    psi = x * sa - y * ca
    return psi * psi - p[RE] * p[RE] < 0.0 and x * ca + y * sa < 0.0


@njit(cache=True, nogil=True)
def rhs(p, s, eps, out):
    x = s[X]
    y = s[Y]
    r2 = x * x + y * y
    r = math.sqrt(r2)
    r3 = r2 * r
    gm = p[GM]
    k = gm / (r3 * r2)
    gxx = k * (3.0 * x * x - r2)
    gyy = k * (3.0 * y * y - r2)
    gxy = k * 3.0 * x * y
    pvx = s[PVX]
    pvy = s[PVY]
    out[X] = s[VX]
    out[Y] = s[VY]
    out[VX] = -gm * x / r3
    out[VY] = -gm * y / r3
    out[M] = 0.0
    out[PX] = -(gxx * pvx + gxy * pvy)
    out[PY] = -(gxy * pvx + gyy * pvy)
    out[PVX] = -s[PX]
    out[PVY] = -s[PY]
    out[PM] = 0.0
    if eps == 1 and p[THRUST] > 0.0:
        pv = math.sqrt(pvx * pvx + pvy * pvy)
        m = s[M]
        thrust = p[THRUST]
        # pv == 0 yields nan here; the propagation loop reports it
        out[VX] += thrust * pvx / (pv * m)
        out[VY] += thrust * pvy / (pv * m)
        out[M] = -thrust / p[VE]
        out[PM] = thrust * pv / (m * m)


@njit(cache=True, nogil=True)
def switching_function(p, s):
    return math.sqrt(s[PVX] ** 2 + s[PVY] ** 2) / s[M] - s[PM] / p[VE]


@njit(cache=True, nogil=True)
def hamiltonian(p, s, eps):
    x = s[X]
    y = s[Y]
    r = math.sqrt(x * x + y * y)
    r3 = r * r * r
    gx = -p[GM] * x / r3
    gy = -p[GM] * y / r3
    h = s[PX] * s[VX] + s[PY] * s[VY] + s[PVX] * gx + s[PVY] * gy
    if eps == 1:
        h += p[THRUST] * switching_function(p, s)
    return h


@njit(cache=True, nogil=True)
def rk8_step(p, s, eps, h, k, out):
    """One DOP853 step of size ``h``; ``k`` is (N_STAGES, N_STATE) scratch."""
    tmp = np.empty(N_STATE)
    rhs(p, s, eps, k[0])
    for i in range(1, N_STAGES):
        for n in range(N_STATE):
            acc = 0.0
            for j in range(i):
                acc += _A[i, j] * k[j, n]
            tmp[n] = s[n] + h * acc
        rhs(p, tmp, eps, k[i])
    for n in range(N_STATE):
        acc = 0.0
        for i in range(N_STAGES):
            acc += _B[i] * k[i, n]
        out[n] = s[n] + h * acc


# Per-component error floors for the optional step control
_ERR_FLOOR = np.array([1.0, 1.0, 1e-3, 1e-3, 1e-3, 1e-9, 1e-9, 1e-6, 1e-6, 1e-6])
_MIN_SUBSTEP_FRACTION = 2.0 ** -20


@njit(cache=True, nogil=True)
def _step_error(p, s, eps, h, k, out, rtol):
    # DOP853 blended 5th/3rd order error norm; requires k filled by rk8_step
    f_new = np.empty(N_STATE)
    rhs(p, out, eps, f_new)
    acc = 0.0
    for n in range(N_STATE):
        e5 = _E5[N_STAGES] * f_new[n]
        e3 = _E3[N_STAGES] * f_new[n]
        for i in range(N_STAGES):
            e5 += _E5[i] * k[i, n]
            e3 += _E3[i] * k[i, n]
        scale = rtol * (max(abs(s[n]), abs(out[n])) + _ERR_FLOOR[n])
        e5 = h * e5 / scale
        e3 = h * e3 / scale
        denom = e5 * e5 + 0.01 * e3 * e3
        if denom > 0.0:
            acc += e5 * e5 * e5 * e5 / denom
    return math.sqrt(acc / N_STATE)


@njit(cache=True, nogil=True)
def advance(p, s, eps, h, k, out, rtol):
    """Advance by ``h``: one fixed DOP853 step, or halved sub-steps when ``rtol > 0``."""
    if rtol <= 0.0:
        rk8_step(p, s, eps, h, k, out)
        return
    cur = s.copy()
    trial = np.empty(N_STATE)
    done = 0.0
    sub = h
    while done < h:
        sub = min(sub, h - done)
        rk8_step(p, cur, eps, sub, k, trial)
        if sub <= h * _MIN_SUBSTEP_FRACTION or _step_error(p, cur, eps, sub, k, trial, rtol) <= 1.0:
            cur[:] = trial
            done += sub
            sub = min(2.0 * sub, h)
        else:
            sub *= 0.5
    out[:] = cur


@njit(cache=True, nogil=True)
def perigee_radius(gm, x, y, vx, vy):
    r = math.sqrt(x * x + y * y)
    energy = 0.5 * (vx * vx + vy * vy) - gm / r
    hmom = x * vy - y * vx
    e2 = 1.0 + 2.0 * energy * hmom * hmom / (gm * gm)
    ecc = math.sqrt(max(e2, 0.0))
    return hmom * hmom / (gm * (1.0 + ecc))


@njit(cache=True, nogil=True)
def apply_jump(p, s, t, delta_eps, out):
    """Costate jump at a shadow boundary.

    Returns ``(mu, dpx, dpy, status)``; ``out`` receives the post-jump state.
    """
    for n in range(N_STATE):
        out[n] = s[n]
    rate = shadow_constraint_rate(p, s[X], s[Y], s[VX], s[VY], t)
    if abs(rate) <= GRAZING_RATE:
        return 0.0, 0.0, 0.0, ERR_GRAZING
    mu = p[THRUST] * switching_function(p, s) * delta_eps / rate
    a = sun_angle(p, t)
    dpx = -mu * math.sin(a)
    dpy = mu * math.cos(a)
    out[PX] += dpx
    out[PY] += dpy
    return mu, dpx, dpy, ERR_NONE


@njit(cache=True, nogil=True)
def _hermite_position(s0, s1, h, theta):
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + theta
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    x = h00 * s0[X] + h10 * h * s0[VX] + h01 * s1[X] + h11 * h * s1[VX]
    y = h00 * s0[Y] + h10 * h * s0[VY] + h01 * s1[Y] + h11 * h * s1[VY]
    return x, y


@njit(cache=True, nogil=True)
def _shadow_mismatch(p, s, t, eps):
    # True when the geometry disagrees with the carried thrust flag
    return in_shadow(p, s[X], s[Y], t) == (eps == 1)


@njit(cache=True, nogil=True)
def find_crossing(p, s, t, eps, h, s_end, event_tol, guard, k, rtol):
    """Locate the first shadow-boundary crossing inside ``(t, t + h]``.

    Returns ``(found, t_hi, width, s_hi)`` where ``t_hi`` is the earliest
    bracketing time on the far side of the boundary after bisection and
    ``width`` the final bracket width.
    """
    s_hi = np.empty(N_STATE)
    s_mid = np.empty(N_STATE)
    t_hi = -1.0
    if guard > 0:
        for i in range(1, guard + 1):
            theta = i / (guard + 1.0)
            xg, yg = _hermite_position(s, s_end, h, theta)
            tg = t + theta * h
            if in_shadow(p, xg, yg, tg) == (eps == 1):
                advance(p, s, eps, theta * h, k, s_mid, rtol)
                if _shadow_mismatch(p, s_mid, tg, eps):
                    t_hi = tg
                    s_hi[:] = s_mid
                    break
    if t_hi < 0.0:
        if _shadow_mismatch(p, s_end, t + h, eps):
            t_hi = t + h
            s_hi[:] = s_end
        else:
            return False, t + h, 0.0, s_hi
    lo = t
    hi = t_hi
    while hi - lo > event_tol:
        mid = 0.5 * (lo + hi)
        advance(p, s, eps, mid - t, k, s_mid, rtol)
        if _shadow_mismatch(p, s_mid, mid, eps):
            hi = mid
            s_hi[:] = s_mid
        else:
            lo = mid
    return True, hi, hi - lo, s_hi


@njit(cache=True, nogil=True)
def _grow2(buf, n):
    new = np.empty((2 * buf.shape[0], buf.shape[1]))
    new[:n] = buf[:n]
    return new


@njit(cache=True, nogil=True)
def propagate_kernel(p, s0, eps0, macro_step, event_tol, max_time,
                     target_perigee_radius, guard, rtol, record):
    """Integrate from ``t = 0`` until the perigee target, ``max_time`` or an error.

    Returns a tuple::

        (stop_kind, error_code, t, s, eps, thrust_time, eclipse_time, angle,
         samples, n_samples, events, n_events)

    ``samples`` rows are ``[t, eps, *s]``; ``events`` rows are
    ``[t_d, delta_eps, mu, dpx, dpy, bracket_width]``.  ``angle`` is the
    unwrapped polar angle swept since ``t = 0``.
    """
    k = np.empty((N_STAGES, N_STATE))
    s = s0.copy()
    s_new = np.empty(N_STATE)
    s_jump = np.empty(N_STATE)
    s_mid = np.empty(N_STATE)
    eps = eps0
    t = 0.0
    thrust_time = 0.0
    eclipse_time = 0.0
    angle = 0.0
    gm = p[GM]
    eclipses = p[ECLIPSES] != 0.0

    cap = 64
    if record:
        cap = int(max_time / macro_step) + 64
    samples = np.empty((cap, N_STATE + 2))
    events = np.empty((64, 6))
    n_samples = 0
    n_events = 0
    if record:
        samples[0, 0] = t
        samples[0, 1] = eps
        samples[0, 2:] = s
        n_samples = 1

    while True:
        if t >= max_time:
            return (STOP_MAX_TIME, ERR_NONE, t, s, eps, thrust_time, eclipse_time,
                    angle, samples, n_samples, events, n_events)
        h = min(macro_step, max_time - t)
        advance(p, s, eps, h, k, s_new, rtol)
        t_end = t + h
        crossed = False
        width = 0.0
        if eclipses:
            crossed, t_c, width, s_c = find_crossing(
                p, s, t, eps, h, s_new, event_tol, guard, k, rtol)
            if crossed:
                t_end = t_c
                s_new[:] = s_c

        finite = True
        for n in range(N_STATE):
            if not math.isfinite(s_new[n]):
                finite = False
        if not finite:
            code = ERR_NONFINITE
            if eps == 1 and s[PVX] == 0.0 and s[PVY] == 0.0:
                code = ERR_DEGENERATE
            return (STOP_ERROR, code, t, s, eps, thrust_time, eclipse_time,
                    angle, samples, n_samples, events, n_events)

        if perigee_radius(gm, s_new[X], s_new[Y], s_new[VX], s_new[VY]) >= target_perigee_radius:
            lo = t
            hi = t_end
            while hi - lo > event_tol:
                mid = 0.5 * (lo + hi)
                advance(p, s, eps, mid - t, k, s_mid, rtol)
                if perigee_radius(gm, s_mid[X], s_mid[Y], s_mid[VX], s_mid[VY]) >= target_perigee_radius:
                    hi = mid
                    s_new[:] = s_mid
                else:
                    lo = mid
            t_end = hi
            crossed = False
            stop = STOP_PERIGEE
        else:
            stop = -1

        if math.hypot(s_new[X], s_new[Y]) <= p[RE]:
            return (STOP_ERROR, ERR_IMPACT, t, s, eps, thrust_time, eclipse_time,
                    angle, samples, n_samples, events, n_events)

        dt = t_end - t
        if eps == 1:
            thrust_time += dt
        else:
            eclipse_time += dt
        angle += math.atan2(s[X] * s_new[Y] - s[Y] * s_new[X],
                            s[X] * s_new[X] + s[Y] * s_new[Y])
        t = t_end
        s[:] = s_new

        if crossed:
            delta_eps = 1 - 2 * eps  # -1 on entry (eps 1 -> 0), +1 on exit
            mu, dpx, dpy, code = apply_jump(p, s, t, float(delta_eps), s_jump)
            if code != ERR_NONE:
                return (STOP_ERROR, code, t, s, eps, thrust_time, eclipse_time,
                        angle, samples, n_samples, events, n_events)
            s[:] = s_jump
            eps = eps + delta_eps
            if record:
                if n_events == events.shape[0]:
                    events = _grow2(events, n_events)
                events[n_events, 0] = t
                events[n_events, 1] = delta_eps
                events[n_events, 2] = mu
                events[n_events, 3] = dpx
                events[n_events, 4] = dpy
                events[n_events, 5] = width
            n_events += 1

        if record:
            if n_samples == samples.shape[0]:
                samples = _grow2(samples, n_samples)
            samples[n_samples, 0] = t
            samples[n_samples, 1] = eps
            samples[n_samples, 2:] = s
            n_samples += 1

        if stop == STOP_PERIGEE:
            return (STOP_PERIGEE, ERR_NONE, t, s, eps, thrust_time, eclipse_time,
                    angle, samples, n_samples, events, n_events)
