"""Compiled inner loops shared by the zigzag samplers.

Precision operators are passed to the kernels as a flat tuple
``(kind, dense, diag, off, alpha, beta)`` so that one compiled loop serves
every representation:

* ``kind == DENSE``: ``dense`` holds the full symmetric matrix.
* ``kind == COMPOUND``: ``alpha * I + beta * 11^T``.
* ``kind == TRIDIAG``: main diagonal ``diag`` and off-diagonal ``off``.

Unused slots carry zero-length arrays.
"""

from math import copysign, inf, log, sqrt

import numpy as np
from numba import njit

DENSE = 0
COMPOUND = 1
TRIDIAG = 2

GRADIENT = 0
BOUNDARY = 1

# kernel exit codes
DONE = 0
NEED_UNIFORMS = 1
EVENT_CAP = 2

# roots this close to zero are the event that was just processed
ROOT_FLOOR = 1e-14


@njit(cache=True, nogil=True)
def _root_above(a, b, c, floor):
    if a == 0.0:
        if b == 0.0:
            return inf
        t = -c / b
        return t if t > floor else inf
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return inf
    q = -0.5 * (b + copysign(sqrt(disc), b))
    r1 = q / a
    r2 = c / q if q != 0.0 else r1
    best = inf
    if r1 > floor:
        best = r1
    if r2 > floor and r2 < best:
        best = r2
    return best


@njit(cache=True, nogil=True)
def min_positive_root(a, b, c):
    """Smaller positive root of ``a t^2 + b t + c``, or ``inf``."""
    return _root_above(a, b, c, ROOT_FLOOR)


@njit(cache=True, nogil=True)
def gradient_time(p, v, phix, phiv):
    """Time until ``p - t phix - t^2/2 phiv`` reaches zero.

    The coordinate flipped last sits at ``p = 0`` exactly with ``|p|``
    about to grow, so no floor is needed against re-triggering it. A
    coordinate whose momentum an earlier event in a near-tie left at or
    just past zero against its velocity flips at once.
    """
    vp = v * p
    if vp < 0.0:
        return 0.0
    if vp == 0.0:
        slope = v * phix
        if slope > 0.0 or (slope == 0.0 and v * phiv > 0.0):
            return 0.0
    return _root_above(0.5 * phiv, phix, -p, 0.0)


@njit(cache=True, nogil=True)
def gradient_times(p, v, phix, phiv, out):
    for k in range(p.size):
        out[k] = gradient_time(p[k], v[k], phix[k], phiv[k])


@njit(cache=True, nogil=True)
def min_positive_root_array(a, b, c, out):
    for k in range(a.size):
        out[k] = min_positive_root(a[k], b[k], c[k])


@njit(cache=True, nogil=True)
def first_positive_time(v, phix, phiv):
    rate0 = v * phix
    if rate0 >= 0.0:
        return 0.0
    slope = v * phiv
    if slope > 0.0:
        return -phix / phiv
    return inf


@njit(cache=True, nogil=True)
def markovian_time(v, phix, phiv, budget):
    """First time the integrated rate ``[v (phix + s phiv)]^+`` reaches ``budget``."""
    if budget == inf:
        return inf
    t0 = first_positive_time(v, phix, phiv)
    if t0 == inf:
        return inf
    slope = v * phiv
    rate_at = v * phix if t0 == 0.0 else 0.0
    s = min_positive_root(0.5 * slope, rate_at, -budget)
    return t0 + s


@njit(cache=True, nogil=True)
def op_matvec(kind, dense, diag, off, alpha, beta, w, out):
    d = w.size
    if kind == DENSE:
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += dense[i, j] * w[j]
            out[i] = acc
    elif kind == COMPOUND:
        total = 0.0
        for j in range(d):
            total += w[j]
        for i in range(d):
            out[i] = alpha * w[i] + beta * total
    else:
        for i in range(d):
            acc = diag[i] * w[i]
            if i > 0:
                acc += off[i - 1] * w[i - 1]
            if i < d - 1:
                acc += off[i] * w[i + 1]
            out[i] = acc


@njit(cache=True, nogil=True)
def op_add_column(kind, dense, diag, off, alpha, beta, i, scale, out):
    """``out += scale * Phi e_i``."""
    d = out.size
    if kind == DENSE:
        for j in range(d):
            out[j] += scale * dense[i, j]
    elif kind == COMPOUND:
        for j in range(d):
            out[j] += scale * beta
        out[i] += scale * alpha
    else:
        out[i] += scale * diag[i]
        if i > 0:
            out[i - 1] += scale * off[i - 1]
        if i < d - 1:
            out[i + 1] += scale * off[i]


@njit(cache=True, nogil=True)
def _refresh_caches(kind, dense, diag, off, alpha, beta, x, v, mu, phix, phiv):
    d = x.size
    work = np.empty(d)
    for i in range(d):
        work[i] = x[i] - mu[i]
    op_matvec(kind, dense, diag, off, alpha, beta, work, phix)
    op_matvec(kind, dense, diag, off, alpha, beta, v, phiv)


@njit(cache=True, nogil=True)
def _next_boundary(x, v, orth):
    """Earliest wall hit among constrained coordinates moving outward.

    A coordinate that roundoff has left a hair outside its wall reports a
    zero hit time, so it is reflected at once instead of escaping.
    """
    tb = inf
    ib = -1
    for i in range(x.size):
        if orth[i] != 0 and orth[i] * v[i] < 0.0:
            t = orth[i] * x[i]
            if t < 0.0:
                t = 0.0
            if t < tb:
                tb = t
                ib = i
    return tb, ib


@njit(cache=True, nogil=True)
def _clamp_to_support(x, orth):
    for i in range(x.size):
        if orth[i] * x[i] < 0.0:
            x[i] = 0.0


@njit(cache=True, nogil=True)
def _record(n, tau, kind_e, coord, x, log_time, log_kind, log_coord,
            ref, log_sqdist, track, log_track):
    if n < log_time.size:
        log_time[n] = tau
        log_kind[n] = kind_e
        log_coord[n] = coord
    if n < log_sqdist.size:
        acc = 0.0
        for j in range(x.size):
            diff = x[j] - ref[j]
            acc += diff * diff
        log_sqdist[n] = acc
    if n < log_track.shape[0]:
        for k in range(track.size):
            log_track[n, k] = x[track[k]]


@njit(cache=True, nogil=True)
def hamiltonian_run(x, p, v, phix, phiv, mu, orth, horizon,
                    kind, dense, diag, off, alpha, beta,
                    max_events, refresh_every,
                    log_time, log_kind, log_coord, ref, log_sqdist, track, log_track):
    """Exact Laplace-momentum dynamics on a truncated Gaussian for ``horizon``.

    ``x, p, v, phix, phiv`` are updated in place. Returns
    ``(tau, n_gradient, n_boundary, status)``.
    """
    d = x.size
    _refresh_caches(kind, dense, diag, off, alpha, beta, x, v, mu, phix, phiv)
    tau = 0.0
    n_grad = 0
    n_bdry = 0
    since = 0
    status = DONE
    while True:
        tg = inf
        ig = -1
        for i in range(d):
            t = gradient_time(p[i], v[i], phix[i], phiv[i])
            if t < tg:
                tg = t
                ig = i
        tb, ib = _next_boundary(x, v, orth)
        if ib >= 0 and tb <= tg:
            tstar = tb
            istar = ib
            kind_e = BOUNDARY
        else:
            tstar = tg
            istar = ig
            kind_e = GRADIENT
        if istar < 0 and horizon == inf:
            break
        if istar < 0 or tau + tstar > horizon:
            dt = horizon - tau
            for i in range(d):
                x[i] += dt * v[i]
                p[i] -= dt * phix[i] + 0.5 * dt * dt * phiv[i]
                phix[i] += dt * phiv[i]
            _clamp_to_support(x, orth)
            tau = horizon
            break
        if n_grad + n_bdry >= max_events:
            status = EVENT_CAP
            break
        for i in range(d):
            x[i] += tstar * v[i]
            p[i] -= tstar * phix[i] + 0.5 * tstar * tstar * phiv[i]
            phix[i] += tstar * phiv[i]
        if kind_e == BOUNDARY:
            x[istar] = 0.0
            p[istar] = -p[istar]
            n_bdry += 1
        else:
            p[istar] = 0.0
            n_grad += 1
        v[istar] = -v[istar]
        op_add_column(kind, dense, diag, off, alpha, beta, istar, 2.0 * v[istar], phiv)
        tau += tstar
        _record(n_grad + n_bdry - 1, tau, kind_e, istar, x, log_time, log_kind,
                log_coord, ref, log_sqdist, track, log_track)
        since += 1
        if refresh_every > 0 and since >= refresh_every:
            _refresh_caches(kind, dense, diag, off, alpha, beta, x, v, mu, phix, phiv)
            since = 0
    return tau, n_grad, n_bdry, status


@njit(cache=True, nogil=True)
def markovian_run(x, v, phix, phiv, mu, orth, tau, horizon,
                  kind, dense, diag, off, alpha, beta,
                  ubuf, upos, first_u, use_first, n_grad, n_bdry, max_events, refresh_every,
                  log_time, log_kind, log_coord, log_budget,
                  ref, log_sqdist, track, log_track):
    """Markovian zigzag from process time ``tau`` to ``horizon``.

    Every segment reads ``d`` uniforms from ``ubuf`` starting at ``upos``;
    when ``use_first`` is set the first segment reads ``first_u`` instead.
    If fewer than ``d`` uniforms remain the loop stops with ``NEED_UNIFORMS``
    so the caller can refill the buffer and resume; caches are recomputed on
    every entry. ``log_budget`` receives ``-log u`` of the eventing
    coordinate for gradient events.

    Returns ``(tau, n_gradient, n_boundary, status, upos)``.
    """
    d = x.size
    _refresh_caches(kind, dense, diag, off, alpha, beta, x, v, mu, phix, phiv)
    since = 0
    status = DONE
    first = use_first
    while True:
        if not first and upos + d > ubuf.size:
            status = NEED_UNIFORMS
            break
        tg = inf
        ig = -1
        eg = 0.0
        for i in range(d):
            if first:
                u = first_u[i]
            else:
                u = ubuf[upos]
                upos += 1
            t0 = first_positive_time(v[i], phix[i], phiv[i])
            # the uniform is consumed regardless; skip the solve when it cannot win
            if t0 >= tg:
                continue
            budget = -log(u) if u > 0.0 else inf
            t = markovian_time(v[i], phix[i], phiv[i], budget)
            if t < tg:
                tg = t
                ig = i
                eg = budget
        first = False
        tb, ib = _next_boundary(x, v, orth)
        if ib >= 0 and tb <= tg:
            tstar = tb
            istar = ib
            kind_e = BOUNDARY
        else:
            tstar = tg
            istar = ig
            kind_e = GRADIENT
        if istar < 0 and horizon == inf:
            break
        if istar < 0 or tau + tstar > horizon:
            dt = horizon - tau
            for i in range(d):
                x[i] += dt * v[i]
                phix[i] += dt * phiv[i]
            _clamp_to_support(x, orth)
            tau = horizon
            break
        if n_grad + n_bdry >= max_events:
            status = EVENT_CAP
            break
        for i in range(d):
            x[i] += tstar * v[i]
            phix[i] += tstar * phiv[i]
        if kind_e == BOUNDARY:
            x[istar] = 0.0
            n_bdry += 1
        else:
            n_grad += 1
        v[istar] = -v[istar]
        op_add_column(kind, dense, diag, off, alpha, beta, istar, 2.0 * v[istar], phiv)
        tau += tstar
        n = n_grad + n_bdry - 1
        _record(n, tau, kind_e, istar, x, log_time, log_kind, log_coord,
                ref, log_sqdist, track, log_track)
        if n < log_budget.size:
            log_budget[n] = eg if kind_e == GRADIENT else np.nan
        since += 1
        if refresh_every > 0 and since >= refresh_every:
            _refresh_caches(kind, dense, diag, off, alpha, beta, x, v, mu, phix, phiv)
            since = 0
    return tau, n_grad, n_bdry, status, upos
