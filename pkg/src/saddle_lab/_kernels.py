"""Compiled inner loops.

Rates are dispatched on an integer model kind so every kernel here can be
cached to disk by numba. Kinds must stay in sync with ``models.py``.
"""

import numpy as np
from numba import njit

OK_CORRAL = 0
COMPETITION = 1
LINEAR_TOY = 2

# stop reasons
HORIZON = 0
TERMINATED = 1
ABSORBED = 2
DOMAIN_EXIT = 3
THETA_HIT = 4
LINE_CROSSING = 5
EXTINCTION = 6
MAX_EVENTS = 7

REASONS = (
    "horizon",
    "terminated",
    "absorbed",
    "domain_exit",
    "theta_hit",
    "line_crossing",
    "extinction",
    "max_events",
)

# a state within this relative distance of a line through the origin counts as on it
_ON_LINE = 1e-12


@njit(cache=True)
def rates(kind, par, n, N, out):
    """Per-N transition rates at count vector ``n`` (state ``n / N``)."""
    u = n[0]
    v = n[1]
    if kind == OK_CORRAL:
        out[0] = v
        out[1] = u
    elif kind == COMPETITION:
        alpha = par[0]
        beta = par[1]
        out[0] = u
        out[1] = alpha * u * (u + v - 1.0) / N + beta * u * v / N
        out[2] = v
        out[3] = alpha * v * (u + v - 1.0) / N + beta * u * v / N
    else:
        mu = par[0]
        lam = par[1]
        c1 = par[2]
        c2 = par[3]
        x1 = u / N
        x2 = v / N
        out[0] = N * (c1 - mu * x1) / 2.0
        out[1] = N * (c1 + mu * x1) / 2.0
        out[2] = N * (c2 + lam * x2) / 2.0
        out[3] = N * (c2 - lam * x2) / 2.0


@njit(cache=True)
def limit_rates(kind, par, x, out):
    """Rates of the limit kernel K(x, dy) at state ``x``."""
    x1 = x[0]
    x2 = x[1]
    if kind == OK_CORRAL:
        out[0] = x2
        out[1] = x1
    elif kind == COMPETITION:
        alpha = par[0]
        beta = par[1]
        out[0] = x1
        out[1] = alpha * x1 * (x1 + x2) + beta * x1 * x2
        out[2] = x2
        out[3] = alpha * x2 * (x1 + x2) + beta * x1 * x2
    else:
        mu = par[0]
        lam = par[1]
        c1 = par[2]
        c2 = par[3]
        out[0] = (c1 - mu * x1) / 2.0
        out[1] = (c1 + mu * x1) / 2.0
        out[2] = (c2 + lam * x2) / 2.0
        out[3] = (c2 - lam * x2) / 2.0


@njit(cache=True)
def _grow(times, counts, size):
    new_t = np.empty(2 * size, dtype=np.float64)
    new_c = np.empty((2 * size, 2), dtype=np.float64)
    new_t[:size] = times[:size]
    new_c[:size] = counts[:size]
    return new_t, new_c


@njit(cache=True)
def _ratio(y1, y2):
    # |y2 / y1| with 0/0 read as 1
    if y1 == 0.0:
        return 1.0 if y2 == 0.0 else np.inf
    return abs(y2 / y1)


@njit(cache=True)
def _crosses_theta(py1, py2, y1, y2, tan_theta):
    # left limit inside the cone, new state on or outside it
    before = _ratio(py1, py2) <= tan_theta * (1.0 + _ON_LINE)
    after = _ratio(y1, y2) >= tan_theta * (1.0 - _ON_LINE)
    return before and after


@njit(cache=True)
def _line_side(y1, y2, q, w):
    # sign of the cross product w x (y - q)
    return w[0] * (y2 - q[1]) - w[1] * (y1 - q[0])


@njit(cache=True)
def jump_kernel(kind, par, steps, n0, N, R, p, lo, hi, rng, t_max,
                terminate_on_zero, eps_floor, stop_theta, tan_theta,
                line_q, line_w, record, max_events, sample_times):
    """Exact event-by-event simulation of the density-scaled chain.

    Each event consumes one standard exponential (holding time) and one
    uniform (jump choice), in that order.
    """
    k = steps.shape[0]
    r = np.empty(k)
    n = n0.astype(np.float64).copy()
    inv_n = 1.0 / N

    size = 1024 if record else 1
    times = np.empty(size)
    counts = np.empty((size, 2))
    times[0] = 0.0
    counts[0, 0] = n[0]
    counts[0, 1] = n[1]
    n_rec = 1

    y1 = R[0, 0] * (n[0] * inv_n - p[0]) + R[0, 1] * (n[1] * inv_n - p[1])
    y2 = R[1, 0] * (n[0] * inv_n - p[0]) + R[1, 1] * (n[1] * inv_n - p[1])

    n_lines = line_q.shape[0]
    side0 = np.empty(n_lines)
    for j in range(n_lines):
        side0[j] = _line_side(y1, y2, line_q[j], line_w[j])

    min_norm = np.sqrt(y1 * y1 + y2 * y2)
    t_min = 0.0
    hit_t = np.nan
    hit_y1 = np.nan
    hit_y2 = np.nan
    n_samples = sample_times.shape[0]
    samples = np.full((n_samples, 2), np.nan)
    i_sample = 0

    t = 0.0
    n_events = 0
    reason = HORIZON
    while True:
        total = 0.0
        rates(kind, par, n, N, r)
        for j in range(k):
            total += r[j]
        if total <= 0.0:
            reason = ABSORBED
            break
        dt = rng.standard_exponential() / total
        t_new = t + dt
        while i_sample < n_samples and sample_times[i_sample] < t_new:
            if sample_times[i_sample] <= t_max:
                samples[i_sample, 0] = y1
                samples[i_sample, 1] = y2
            i_sample += 1
        if t_new > t_max:
            t = t_max
            reason = HORIZON
            break
        u = rng.random() * total
        acc = 0.0
        jump = k - 1
        for j in range(k):
            acc += r[j]
            if u < acc:
                jump = j
                break
        t = t_new
        n[0] += steps[jump, 0]
        n[1] += steps[jump, 1]
        n_events += 1

        py1 = y1
        py2 = y2
        x1 = n[0] * inv_n
        x2 = n[1] * inv_n
        y1 = R[0, 0] * (x1 - p[0]) + R[0, 1] * (x2 - p[1])
        y2 = R[1, 0] * (x1 - p[0]) + R[1, 1] * (x2 - p[1])

        if record:
            if n_rec == size:
                times, counts = _grow(times, counts, size)
                size *= 2
            times[n_rec] = t
            counts[n_rec, 0] = n[0]
            counts[n_rec, 1] = n[1]
            n_rec += 1

        norm = np.sqrt(y1 * y1 + y2 * y2)
        if norm < min_norm:
            min_norm = norm
            t_min = t
        if tan_theta > 0.0 and np.isnan(hit_t):
            if _crosses_theta(py1, py2, y1, y2, tan_theta):
                hit_t = t
                hit_y1 = y1
                hit_y2 = y2
                if stop_theta:
                    reason = THETA_HIT
                    break

        if terminate_on_zero and (n[0] == 0.0 or n[1] == 0.0):
            reason = TERMINATED
            break
        if not (lo[0] < x1 < hi[0] and lo[1] < x2 < hi[1]):
            reason = DOMAIN_EXIT
            break
        if eps_floor > 0.0 and (n[0] < eps_floor or n[1] < eps_floor):
            reason = EXTINCTION
            break
        crossed = False
        for j in range(n_lines):
            if _line_side(y1, y2, line_q[j], line_w[j]) * side0[j] <= 0.0:
                crossed = True
        if crossed:
            reason = LINE_CROSSING
            break
        if n_events >= max_events:
            reason = MAX_EVENTS
            break

    # only termination and absorption freeze the process; after any other
    # stop later sample times stay unknown
    frozen = reason == TERMINATED or reason == ABSORBED
    while i_sample < n_samples:
        if frozen or sample_times[i_sample] <= t:
            samples[i_sample, 0] = y1
            samples[i_sample, 1] = y2
        i_sample += 1

    return (times[:n_rec], counts[:n_rec], n_events, t, reason,
            min_norm, t_min, hit_t, hit_y1, hit_y2, samples, n)


@njit(cache=True)
def _sqrt_psd(a11, a12, a22, out):
    # symmetric square root of a 2x2 positive semidefinite matrix
    det = a11 * a22 - a12 * a12
    if det < 0.0:
        det = 0.0
    s = np.sqrt(det)
    tr = a11 + a22 + 2.0 * s
    if tr <= 0.0:
        out[0, 0] = 0.0
        out[0, 1] = 0.0
        out[1, 0] = 0.0
        out[1, 1] = 0.0
        return
    t = np.sqrt(tr)
    out[0, 0] = (a11 + s) / t
    out[0, 1] = a12 / t
    out[1, 0] = a12 / t
    out[1, 1] = (a22 + s) / t


@njit(cache=True)
def diffusion_kernel(kind, par, steps, x0, N, noise, dt, R, p, lo, hi, rng,
                     t_max, terminate_on_zero, eps_floor, stop_theta,
                     tan_theta, line_q, line_w, record, sample_times):
    """Euler-Maruyama for dX = sigma^N(X) dW + b^N(X) dt.

    b^N and sigma^N are the first moment and the symmetric root of the
    second moment of the per-N jump kernel. Two standard normals per step.
    """
    k = steps.shape[0]
    r = np.empty(k)
    n = np.empty(2)
    x = x0.copy()
    sig = np.empty((2, 2))
    sqdt = np.sqrt(dt)
    n_steps = int(np.floor(t_max / dt + 1e-9))

    size = n_steps + 1 if record else 1
    times = np.empty(size)
    states = np.empty((size, 2))
    times[0] = 0.0
    states[0, 0] = x[0]
    states[0, 1] = x[1]
    n_rec = 1

    y1 = R[0, 0] * (x[0] - p[0]) + R[0, 1] * (x[1] - p[1])
    y2 = R[1, 0] * (x[0] - p[0]) + R[1, 1] * (x[1] - p[1])
    n_lines = line_q.shape[0]
    side0 = np.empty(n_lines)
    for j in range(n_lines):
        side0[j] = _line_side(y1, y2, line_q[j], line_w[j])

    min_norm = np.sqrt(y1 * y1 + y2 * y2)
    t_min = 0.0
    hit_t = np.nan
    hit_y1 = np.nan
    hit_y2 = np.nan
    n_samples = sample_times.shape[0]
    samples = np.full((n_samples, 2), np.nan)
    i_sample = 0

    t = 0.0
    reason = HORIZON
    for step in range(1, n_steps + 1):
        n[0] = x[0] * N
        n[1] = x[1] * N
        rates(kind, par, n, N, r)
        b1 = 0.0
        b2 = 0.0
        a11 = 0.0
        a12 = 0.0
        a22 = 0.0
        for j in range(k):
            s1 = steps[j, 0]
            s2 = steps[j, 1]
            b1 += s1 * r[j]
            b2 += s2 * r[j]
            rj = r[j] if r[j] > 0.0 else 0.0
            a11 += s1 * s1 * rj
            a12 += s1 * s2 * rj
            a22 += s2 * s2 * rj
        b1 /= N
        b2 /= N
        nn = N * N
        _sqrt_psd(a11 / nn, a12 / nn, a22 / nn, sig)
        w1 = rng.standard_normal() * sqdt
        w2 = rng.standard_normal() * sqdt
        t_new = step * dt
        while i_sample < n_samples and sample_times[i_sample] < t_new:
            samples[i_sample, 0] = y1
            samples[i_sample, 1] = y2
            i_sample += 1
        x[0] += b1 * dt + noise * (sig[0, 0] * w1 + sig[0, 1] * w2)
        x[1] += b2 * dt + noise * (sig[1, 0] * w1 + sig[1, 1] * w2)
        t = t_new

        py1 = y1
        py2 = y2
        y1 = R[0, 0] * (x[0] - p[0]) + R[0, 1] * (x[1] - p[1])
        y2 = R[1, 0] * (x[0] - p[0]) + R[1, 1] * (x[1] - p[1])
        if record:
            times[n_rec] = t
            states[n_rec, 0] = x[0]
            states[n_rec, 1] = x[1]
            n_rec += 1

        norm = np.sqrt(y1 * y1 + y2 * y2)
        if norm < min_norm:
            min_norm = norm
            t_min = t
        if tan_theta > 0.0 and np.isnan(hit_t):
            if _crosses_theta(py1, py2, y1, y2, tan_theta):
                hit_t = t
                hit_y1 = y1
                hit_y2 = y2
                if stop_theta:
                    reason = THETA_HIT
                    break
        if terminate_on_zero and (x[0] <= 0.0 or x[1] <= 0.0):
            reason = TERMINATED
            break
        if not (lo[0] < x[0] < hi[0] and lo[1] < x[1] < hi[1]):
            reason = DOMAIN_EXIT
            break
        if eps_floor > 0.0 and (x[0] * N < eps_floor or x[1] * N < eps_floor):
            reason = EXTINCTION
            break
        crossed = False
        for j in range(n_lines):
            if _line_side(y1, y2, line_q[j], line_w[j]) * side0[j] <= 0.0:
                crossed = True
        if crossed:
            reason = LINE_CROSSING
            break

    frozen = reason == TERMINATED
    while i_sample < n_samples:
        if frozen or sample_times[i_sample] <= t:
            samples[i_sample, 0] = y1
            samples[i_sample, 1] = y2
        i_sample += 1

    return (times[:n_rec], states[:n_rec], t, reason,
            min_norm, t_min, hit_t, hit_y1, hit_y2, samples, x)


@njit(cache=True)
def gamma_kernel(A, S, dt, rng, M):
    """Euler-Maruyama for d gamma = S_k dW + A_k gamma dt, started at 0.

    ``A`` and ``S`` hold the drift Jacobian and noise root on the time grid;
    returns the terminal states of ``M`` independent paths.
    """
    n_steps = A.shape[0]
    sqdt = np.sqrt(dt)
    out = np.empty((M, 2))
    for m in range(M):
        g1 = 0.0
        g2 = 0.0
        for i in range(n_steps):
            w1 = rng.standard_normal() * sqdt
            w2 = rng.standard_normal() * sqdt
            d1 = (A[i, 0, 0] * g1 + A[i, 0, 1] * g2) * dt + S[i, 0, 0] * w1 + S[i, 0, 1] * w2
            d2 = (A[i, 1, 0] * g1 + A[i, 1, 1] * g2) * dt + S[i, 1, 0] * w1 + S[i, 1, 1] * w2
            g1 += d1
            g2 += d2
        out[m, 0] = g1
        out[m, 1] = g2
    return out
