"""Compiled bulk scorer: evidence assignment + Sim for many hypotheses at once.

Mirrors ``evidence.assign_evidence`` and ``scoring.similarity`` term by term;
``tests/test_kernel.py`` checks the two agree. The angle term is evaluated
as |cross| / (|u| |v|), which equals |sin(theta)| without trig calls.
"""

import numpy as np
from numba import njit, prange

TIE_EPS = 1e-12


@njit(cache=True, inline="always")
def _d3(t_e, t_f, eps):
    lo = min(t_e, t_f)
    hi = max(t_e, t_f)
    if hi - lo <= eps and ((abs(lo) <= eps and abs(hi) <= eps) or (abs(lo - 1.0) <= eps and abs(hi - 1.0) <= eps)):
        return 0.5
    if 0.0 <= lo and hi <= 1.0:
        return 0.0
    if lo <= 0.0 and hi >= 1.0:
        return 0.0
    if lo >= 1.0:
        return abs(t_e - t_f) + lo - 1.0
    if hi <= 0.0:
        return abs(t_e - t_f) - hi
    if lo < 0.0:
        return 1.0 - abs(hi)
    return abs(lo)


@njit(cache=True)
def _score_one(a, b, tx, ty, tmpl, img, th, eps, labels):
    m = tmpl.shape[0]
    n = img.shape[0]
    cap = 2.0 / 3.0 * th

    hx = np.empty(m)
    hy = np.empty(m)
    vx = np.empty(m)
    vy = np.empty(m)
    vlen = np.empty(m)
    for j in range(m):
        px = a * tmpl[j, 0] - b * tmpl[j, 1] + tx
        py = b * tmpl[j, 0] + a * tmpl[j, 1] + ty
        qx = a * tmpl[j, 2] - b * tmpl[j, 3] + tx
        qy = b * tmpl[j, 2] + a * tmpl[j, 3] + ty
        hx[j] = px
        hy[j] = py
        vx[j] = qx - px
        vy[j] = qy - py
        vlen[j] = np.sqrt(vx[j] * vx[j] + vy[j] * vy[j])

    matchsum = np.zeros(m)
    supported = np.zeros(m, dtype=np.bool_)
    for i in range(n):
        cx = img[i, 0]
        cy = img[i, 1]
        ux = img[i, 2] - cx
        uy = img[i, 3] - cy
        ulen = np.sqrt(ux * ux + uy * uy)
        best = -1
        mindis = th
        best_te = 0.0
        best_tf = 0.0
        for j in range(m):
            cross = ux * vy[j] - uy * vx[j]
            d1 = abs(cross) / (ulen * vlen[j])
            if d1 > cap:
                continue
            ex = cx - hx[j]
            ey = cy - hy[j]
            fx = img[i, 2] - hx[j]
            fy = img[i, 3] - hy[j]
            d = (abs(vx[j] * ey - vy[j] * ex) + abs(vx[j] * fy - vy[j] * fx)) / (2.0 * vlen[j])
            d2 = d / vlen[j]
            if d2 > cap:
                continue
            l2 = vx[j] * vx[j] + vy[j] * vy[j]
            t_e = (ex * vx[j] + ey * vy[j]) / l2
            t_f = (fx * vx[j] + fy * vy[j]) / l2
            d3 = _d3(t_e, t_f, eps)
            if d3 > cap:
                continue
            dis = d1 + d2 + d3
            if dis > th or dis >= mindis:
                continue
            if best >= 0 and dis > mindis - TIE_EPS:
                continue
            best = j
            mindis = dis
            best_te = t_e
            best_tf = t_f
        labels[i] = best
        if best >= 0:
            supported[best] = True
            lo = max(0.0, min(best_te, best_tf))
            hi = min(1.0, max(best_te, best_tf))
            if hi > lo:
                matchsum[best] += vlen[best] * (hi - lo)

    total = 0.0
    covered = 0.0
    gamma = 0
    for j in range(m):
        total += vlen[j]
        covered += min(vlen[j], matchsum[j])
        if supported[j]:
            gamma += 1
    sim = (covered / total) * (gamma / m)
    return min(1.0, sim)


@njit(cache=True)
def score_hypotheses_serial(params, tmpl, img, th, eps):
    """``params`` rows are ``(a, b, tx, ty)`` with a = s cos r, b = s sin r."""
    h = params.shape[0]
    out = np.empty(h)
    labels = np.empty(img.shape[0], dtype=np.int64)
    for k in range(h):
        out[k] = _score_one(params[k, 0], params[k, 1], params[k, 2], params[k, 3], tmpl, img, th, eps, labels)
    return out


@njit(cache=True, parallel=True)
def score_hypotheses_parallel(params, tmpl, img, th, eps):
    h = params.shape[0]
    out = np.empty(h)
    for k in prange(h):
        labels = np.empty(img.shape[0], dtype=np.int64)
        out[k] = _score_one(params[k, 0], params[k, 1], params[k, 2], params[k, 3], tmpl, img, th, eps, labels)
    return out


@njit(cache=True)
def assign_one(params, tmpl, img, th, eps):
    labels = np.empty(img.shape[0], dtype=np.int64)
    sim = _score_one(params[0], params[1], params[2], params[3], tmpl, img, th, eps, labels)
    return sim, labels
