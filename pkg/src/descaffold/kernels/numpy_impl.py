"""Vectorized numpy implementations of the hot kernels.

These are the fallback path when numba is disabled or unavailable. Each
function mirrors a numba twin in ``numba_impl``; the per-pixel arithmetic
is written with the same operation order so the two backends agree to
floating-point roundoff.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Coordinates this close to the source rectangle still count as inside;
# absorbs trig roundoff at exact right angles.
EDGE_TOL = 1e-9


def _axis_coords(n_out: int, n_in: int) -> np.ndarray:
    # Align-corners grid; a single output sample falls on the centroid.
    if n_out == 1:
        return np.full(1, (n_in - 1) / 2.0)
    return np.arange(n_out, dtype=np.float64) * ((n_in - 1) / (n_out - 1))


def resample_bilinear(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w, _ = src.shape
    sy = np.clip(_axis_coords(out_h, h), 0.0, h - 1.0)
    sx = np.clip(_axis_coords(out_w, w), 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]

    p00 = src[y0[:, None], x0[None, :]]
    p01 = src[y0[:, None], x1[None, :]]
    p10 = src[y1[:, None], x0[None, :]]
    p11 = src[y1[:, None], x1[None, :]]
    top = p00 + fx * (p01 - p00)
    bot = p10 + fx * (p11 - p10)
    return top + fy * (bot - top)


def rotate_bilinear(src: np.ndarray, cos_t: float, sin_t: float, fill: float) -> np.ndarray:
    h, w, c = src.shape
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    dx = xs - cx
    dy = ys - cy
    sx = cx + dx * cos_t - dy * sin_t
    sy = cy + dx * sin_t + dy * cos_t

    inside = ((sx >= -EDGE_TOL) & (sx <= w - 1 + EDGE_TOL)
              & (sy >= -EDGE_TOL) & (sy <= h - 1 + EDGE_TOL))
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]

    p00 = src[y0, x0]
    p01 = src[y0, x1]
    p10 = src[y1, x0]
    p11 = src[y1, x1]
    top = p00 + fx * (p01 - p00)
    bot = p10 + fx * (p11 - p10)
    val = top + fy * (bot - top)
    return np.where(inside[..., None], val, fill)


def alpha_composite(activity: np.ndarray, cutout: np.ndarray) -> np.ndarray:
    alpha = cutout[:, :, 3:4]
    return activity + alpha * (cutout[:, :, :3] - activity)


def _corr_valid_axis0(a: np.ndarray, win: np.ndarray) -> np.ndarray:
    return sliding_window_view(a, win.size, axis=0) @ win


def _corr_valid_axis1(a: np.ndarray, win: np.ndarray) -> np.ndarray:
    return sliding_window_view(a, win.size, axis=1) @ win


def _local_mean(a: np.ndarray, win: np.ndarray) -> np.ndarray:
    return _corr_valid_axis1(_corr_valid_axis0(a, win), win)


def ssim_stat_maps(x: np.ndarray, y: np.ndarray, win: np.ndarray):
    """Gaussian-weighted local first and second moments over valid windows."""
    mx = _local_mean(x, win)
    my = _local_mean(y, win)
    mxx = _local_mean(x * x, win)
    myy = _local_mean(y * y, win)
    mxy = _local_mean(x * y, win)
    return mx, my, mxx, myy, mxy


def cosine_similarity_matrix(a: np.ndarray, b: np.ndarray, eps: float) -> np.ndarray:
    na = np.sqrt(np.einsum("ij,ij->i", a, a))
    nb = np.sqrt(np.einsum("ij,ij->i", b, b))
    return (a @ b.T) / ((na + eps)[:, None] * (nb + eps)[None, :])


def softmax_rows(s: np.ndarray, alpha: float) -> np.ndarray:
    z = alpha * s
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def diffusion_fill(img: np.ndarray, mask: np.ndarray, init: np.ndarray,
                   max_iters: int, tol: float) -> np.ndarray:
    """Jacobi relaxation: masked pixels move toward the mean of their
    in-bounds 4-neighbours until the largest update drops below ``tol``."""
    h, w, c = img.shape
    cur = img.copy()
    cur[mask] = init

    cnt = np.zeros((h, w), dtype=np.float64)
    cnt[1:, :] += 1.0
    cnt[:-1, :] += 1.0
    cnt[:, 1:] += 1.0
    cnt[:, :-1] += 1.0

    sel = mask
    for _ in range(max_iters):
        acc = np.zeros_like(cur)
        acc[1:, :] += cur[:-1, :]
        acc[:-1, :] += cur[1:, :]
        acc[:, 1:] += cur[:, :-1]
        acc[:, :-1] += cur[:, 1:]
        new_vals = acc[sel] / cnt[sel][:, None]
        delta = np.abs(new_vals - cur[sel]).max() if new_vals.size else 0.0
        cur[sel] = new_vals
        if delta < tol:
            break
    return cur
