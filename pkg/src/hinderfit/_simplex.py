"""Compiled Nelder-Mead search over the profiled relative-RSS objective.

The parameter vector is ``[ln g_u, (t_h - t_ref) / span, logit_2, ...]``;
``Q_h`` never appears because its optimum is closed-form. The simplex moves
(reflect 1, expand 2, contract 1/2, shrink 1/2) follow the textbook method,
the same coefficients scipy uses in its non-adaptive mode.
"""
import math

import numba
import numpy as np

from .kernel import _profile, _solve_log_h

EXPONENTIAL, LOGISTIC, SERIES = 0, 1, 2
LOGIT_CLIP = 30.0
_LN2 = math.log(2.0)


@numba.njit(cache=True)
def decode(p, kind, t0, t_ref, span, n_orders):
    g_u = math.exp(p[0])
    t_h = t0 if kind == EXPONENTIAL else t_ref + p[1] * span
    w = np.ones(max(n_orders, 1))
    if kind == SERIES and n_orders > 1:
        total = 1.0
        for j in range(1, n_orders):
            z = min(max(p[1 + j], -LOGIT_CLIP), LOGIT_CLIP)
            w[j] = math.exp(z)
            total += w[j]
        for j in range(n_orders):
            w[j] /= total
    return g_u, t_h, w


@numba.njit(cache=True)
def objective(p, kind, t, log_q, t_ref, span, orders, rel_tol, max_iter):
    """Return ``(ln Q_h, rss)``; rss is inf where the model cannot be evaluated."""
    for v in p:
        if not math.isfinite(v):
            return math.nan, math.inf
    if abs(p[0]) > 50.0:
        return math.nan, math.inf
    g_u, t_h, w = decode(p, kind, t[0], t_ref, span, orders.shape[0])
    n = t.shape[0]
    if kind == SERIES:
        x = np.empty(n)
        for i in range(n):
            x[i] = g_u * (t[i] - t_h)
        u, failed = _solve_log_h(x, orders, w, rel_tol, max_iter)
        if failed:
            return math.nan, math.inf
        lr = u - log_q
    else:
        lr = np.empty(n)
        for i in range(n):
            xi = g_u * (t[i] - t_h)
            if kind == EXPONENTIAL:
                log_h = xi
            elif xi > 0:
                log_h = _LN2 - math.log1p(math.exp(-xi))
            else:
                log_h = _LN2 + xi - math.log1p(math.exp(xi))
            lr[i] = log_h - log_q[i]
    log_c, value, ok = _profile(lr)
    if not ok:
        return math.nan, math.inf
    return log_c, value


@numba.njit(cache=True)
def nelder_mead(p0, steps, kind, t, log_q, t_ref, span, orders, rel_tol, max_iter,
                xatol, max_steps):
    """Minimise ``objective`` from ``p0``.

    Stops when every vertex lies within ``xatol * max(1, |best|)`` of the best
    one. Returns ``(p_best, f_best, converged, diameter)``.
    """
    d = p0.shape[0]
    sim = np.empty((d + 1, d))
    fs = np.empty(d + 1)
    sim[0] = p0
    for i in range(d):
        sim[i + 1] = p0
        sim[i + 1, i] += steps[i]
    for i in range(d + 1):
        fs[i] = objective(sim[i], kind, t, log_q, t_ref, span, orders, rel_tol, max_iter)[1]
    converged = False
    diameter = math.inf
    for _ in range(max_steps):
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]
        diameter = 0.0
        for i in range(1, d + 1):
            for j in range(d):
                diameter = max(diameter, abs(sim[i, j] - sim[0, j]))
        size = 0.0
        for j in range(d):
            size = max(size, abs(sim[0, j]))
        diameter /= max(1.0, size)
        if diameter <= xatol:
            converged = True
            break
        centroid = np.zeros(d)
        for i in range(d):
            centroid += sim[i]
        centroid /= d
        xr = 2.0 * centroid - sim[d]
        fr = objective(xr, kind, t, log_q, t_ref, span, orders, rel_tol, max_iter)[1]
        if fr < fs[0]:
            xe = 3.0 * centroid - 2.0 * sim[d]
            fe = objective(xe, kind, t, log_q, t_ref, span, orders, rel_tol, max_iter)[1]
            if fe < fr:
                sim[d] = xe
                fs[d] = fe
            else:
                sim[d] = xr
                fs[d] = fr
            continue
        if fr < fs[d - 1]:
            sim[d] = xr
            fs[d] = fr
            continue
        if fr < fs[d]:
            xc = 1.5 * centroid - 0.5 * sim[d]
            fc = objective(xc, kind, t, log_q, t_ref, span, orders, rel_tol, max_iter)[1]
            if fc <= fr:
                sim[d] = xc
                fs[d] = fc
                continue
        else:
            xc = 0.5 * centroid + 0.5 * sim[d]
            fc = objective(xc, kind, t, log_q, t_ref, span, orders, rel_tol, max_iter)[1]
            if fc < fs[d]:
                sim[d] = xc
                fs[d] = fc
                continue
        for i in range(1, d + 1):
            sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
            fs[i] = objective(sim[i], kind, t, log_q, t_ref, span, orders, rel_tol, max_iter)[1]
    best = np.argmin(fs)
    return sim[best].copy(), fs[best], converged, diameter
