"""Numba-compiled twins of the hot kernels in ``numpy_impl``.

Loop bodies keep the exact operation order of the vectorized versions so
both backends agree to roundoff. All functions are nopython-compiled and
cached; first call per process pays the JIT cost.
"""

from __future__ import annotations

import numpy as np
from numba import njit

EDGE_TOL = 1e-9


@njit(cache=True)
def _axis_coords(n_out, n_in):
    out = np.empty(n_out, dtype=np.float64)
    if n_out == 1:
        out[0] = (n_in - 1) / 2.0
        return out
    step = (n_in - 1) / (n_out - 1)
    for i in range(n_out):
        v = i * step
        if v < 0.0:
            v = 0.0
        elif v > n_in - 1.0:
            v = n_in - 1.0
        out[i] = v
    return out


@njit(cache=True)
def resample_bilinear(src, out_h, out_w):
    h, w, c = src.shape
    sy = _axis_coords(out_h, h)
    sx = _axis_coords(out_w, w)
    out = np.empty((out_h, out_w, c), dtype=np.float64)
    for i in range(out_h):
        y0 = int(np.floor(sy[i]))
        y1 = min(y0 + 1, h - 1)
        fy = sy[i] - y0
        for j in range(out_w):
            x0 = int(np.floor(sx[j]))
            x1 = min(x0 + 1, w - 1)
            fx = sx[j] - x0
            for k in range(c):
                p00 = src[y0, x0, k]
                p01 = src[y0, x1, k]
                p10 = src[y1, x0, k]
                p11 = src[y1, x1, k]
                top = p00 + fx * (p01 - p00)
                bot = p10 + fx * (p11 - p10)
                out[i, j, k] = top + fy * (bot - top)
    return out


@njit(cache=True)
def rotate_bilinear(src, cos_t, sin_t, fill):
    h, w, c = src.shape
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    out = np.empty((h, w, c), dtype=np.float64)
    for yo in range(h):
        dy = yo - cy
        for xo in range(w):
            dx = xo - cx
            sx = cx + dx * cos_t - dy * sin_t
            sy = cy + dx * sin_t + dy * cos_t
            if (sx < -EDGE_TOL or sx > w - 1 + EDGE_TOL
                    or sy < -EDGE_TOL or sy > h - 1 + EDGE_TOL):
                for k in range(c):
                    out[yo, xo, k] = fill
                continue
            if sx < 0.0:
                sx = 0.0
            elif sx > w - 1.0:
                sx = w - 1.0
            if sy < 0.0:
                sy = 0.0
            elif sy > h - 1.0:
                sy = h - 1.0
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            x1 = min(x0 + 1, w - 1)
            y1 = min(y0 + 1, h - 1)
            fx = sx - x0
            fy = sy - y0
            for k in range(c):
                p00 = src[y0, x0, k]
                p01 = src[y0, x1, k]
                p10 = src[y1, x0, k]
                p11 = src[y1, x1, k]
                top = p00 + fx * (p01 - p00)
                bot = p10 + fx * (p11 - p10)
                out[yo, xo, k] = top + fy * (bot - top)
    return out


@njit(cache=True)
def alpha_composite(activity, cutout):
    h, w, _ = activity.shape
    out = np.empty((h, w, 3), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            a = cutout[y, x, 3]
            for k in range(3):
                out[y, x, k] = activity[y, x, k] + a * (cutout[y, x, k] - activity[y, x, k])
    return out


@njit(cache=True)
def _corr_valid_axis0(a, win):
    h, w = a.shape
    k = win.size
    out = np.empty((h - k + 1, w), dtype=np.float64)
    for i in range(h - k + 1):
        for j in range(w):
            acc = 0.0
            for t in range(k):
                acc += a[i + t, j] * win[t]
            out[i, j] = acc
    return out


@njit(cache=True)
def _corr_valid_axis1(a, win):
    h, w = a.shape
    k = win.size
    out = np.empty((h, w - k + 1), dtype=np.float64)
    for i in range(h):
        for j in range(w - k + 1):
            acc = 0.0
            for t in range(k):
                acc += a[i, j + t] * win[t]
            out[i, j] = acc
    return out


@njit(cache=True)
def _local_mean(a, win):
    return _corr_valid_axis1(_corr_valid_axis0(a, win), win)


@njit(cache=True)
def ssim_stat_maps(x, y, win):
    mx = _local_mean(x, win)
    my = _local_mean(y, win)
    mxx = _local_mean(x * x, win)
    myy = _local_mean(y * y, win)
    mxy = _local_mean(x * y, win)
    return mx, my, mxx, myy, mxy


@njit(cache=True)
def cosine_similarity_matrix(a, b, eps):
    n, d = a.shape
    m = b.shape[0]
    na = np.empty(n, dtype=np.float64)
    nb = np.empty(m, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for t in range(d):
            acc += a[i, t] * a[i, t]
        na[i] = np.sqrt(acc)
    for j in range(m):
        acc = 0.0
        for t in range(d):
            acc += b[j, t] * b[j, t]
        nb[j] = np.sqrt(acc)
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            dot = 0.0
            for t in range(d):
                dot += a[i, t] * b[j, t]
            out[i, j] = dot / ((na[i] + eps) * (nb[j] + eps))
    return out


@njit(cache=True)
def softmax_rows(s, alpha):
    n, m = s.shape
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        hi = alpha * s[i, 0]
        for j in range(1, m):
            z = alpha * s[i, j]
            if z > hi:
                hi = z
        tot = 0.0
        for j in range(m):
            e = np.exp(alpha * s[i, j] - hi)
            out[i, j] = e
            tot += e
        for j in range(m):
            out[i, j] /= tot
    return out


@njit(cache=True)
def diffusion_fill(img, mask, init, max_iters, tol):
    h, w, c = img.shape
    cur = img.copy()
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                for k in range(c):
                    cur[y, x, k] = init[k]
    nxt = cur.copy()
    for _ in range(max_iters):
        delta = 0.0
        for y in range(h):
            for x in range(w):
                if not mask[y, x]:
                    continue
                cnt = 0.0
                if y > 0:
                    cnt += 1.0
                if y < h - 1:
                    cnt += 1.0
                if x > 0:
                    cnt += 1.0
                if x < w - 1:
                    cnt += 1.0
                for k in range(c):
                    acc = 0.0
                    if y > 0:
                        acc += cur[y - 1, x, k]
                    if y < h - 1:
                        acc += cur[y + 1, x, k]
                    if x > 0:
                        acc += cur[y, x - 1, k]
                    if x < w - 1:
                        acc += cur[y, x + 1, k]
                    v = acc / cnt
                    dlt = abs(v - cur[y, x, k])
                    if dlt > delta:
                        delta = dlt
                    nxt[y, x, k] = v
        tmp = cur
        cur = nxt
        nxt = tmp
        if delta < tol:
            break
    return cur
