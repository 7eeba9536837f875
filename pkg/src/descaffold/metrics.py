"""Restoration and segmentation metrics.

MIoU over the 2-class mask convention, MAE / PSNR / SSIM on [0,1] images
(dynamic range L = 1), and a Frechet distance between Gaussians fitted to
embedding sets. The embedding is pluggable; the default flattens a
grayscale thumbnail, so the reported column is "Frechet (pixel)" rather
than a claim of Inception-FID comparability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .raster import BinaryMask, Raster, bilinear_resample, to_gray

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 1.0) ** 2
SSIM_C2 = (0.03 * 1.0) ** 2

_EIG_CLAMP = 1e-10
_PSD_TOL = 1e-8


def miou(prediction: BinaryMask, ground_truth: BinaryMask) -> float:
    """Mean IoU over the two classes (occluded / background).

    A class absent from both masks scores IoU 1, so miou(x, x) == 1 holds
    for any mask.
    """
    if (prediction.height, prediction.width) != (ground_truth.height, ground_truth.width):
        raise ValueError("mask dimensions differ")
    p = prediction.bits
    g = ground_truth.bits
    total = 0.0
    for cls in (True, False):
        pc = p if cls else ~p
        gc = g if cls else ~g
        union = np.count_nonzero(pc | gc)
        if union == 0:
            total += 1.0
        else:
            total += np.count_nonzero(pc & gc) / union
    return total / 2.0


def _check_same_shape(a: Raster, b: Raster) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"image shapes differ: {a.data.shape} vs {b.data.shape}")


def mae(restored: Raster, gt: Raster) -> float:
    _check_same_shape(restored, gt)
    return float(np.mean(np.abs(restored.data - gt.data)))


def psnr(restored: Raster, gt: Raster) -> float:
    """10 log10(1 / MSE) in dB; identical images give float('inf')."""
    _check_same_shape(restored, gt)
    mse = float(np.mean((restored.data - gt.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian; the 2-D window is its outer product."""
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def ssim(restored: Raster, gt: Raster) -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), per channel."""
    _check_same_shape(restored, gt)
    h, w = restored.height, restored.width
    if min(h, w) < SSIM_WINDOW:
        raise ValueError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    win = gaussian_window()
    vals = []
    for c in range(restored.channels):
        x = np.ascontiguousarray(restored.data[:, :, c])
        y = np.ascontiguousarray(gt.data[:, :, c])
        mx, my, mxx, myy, mxy = kernels.ssim_stat_maps(x, y, win)
        vx = mxx - mx * mx
        vy = myy - my * my
        cxy = mxy - mx * my
        num = (2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2)
        den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)
        vals.append(float(np.mean(num / den)))
    return float(np.mean(vals))


def fit_gaussian(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and unbiased (n-1) covariance of row vectors."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise ValueError("expected an (n, d) array of embedding vectors")
    n = vectors.shape[0]
    if n < 2:
        raise ValueError("need at least 2 vectors to fit a covariance")
    mean = vectors.mean(axis=0)
    centered = vectors - mean
    cov = (centered.T @ centered) / (n - 1)
    return mean, cov


def frechet_distance(m1: tuple[np.ndarray, np.ndarray],
                     m2: tuple[np.ndarray, np.ndarray]) -> float:
    """||mu1-mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2)).

    The matrix square root comes from the symmetric eigen-decomposition of
    the symmetrized product; eigenvalues below 1e-10 are clamped to zero.
    """
    mu1, cov1 = (np.asarray(a, dtype=np.float64) for a in m1)
    mu2, cov2 = (np.asarray(a, dtype=np.float64) for a in m2)
    if mu1.shape != mu2.shape or cov1.shape != cov2.shape:
        raise ValueError("moment dimensions differ")
    for cov in (cov1, cov2):
        if not np.allclose(cov, cov.T, atol=_PSD_TOL):
            raise ValueError("covariance is not symmetric within tolerance")
        if float(np.linalg.eigvalsh(cov).min()) < -_PSD_TOL:
            raise ValueError("covariance is not PSD within tolerance")
    diff = mu1 - mu2
    prod = cov1 @ cov2
    sym = (prod + prod.T) / 2.0
    eig = np.linalg.eigvalsh(sym)
    eig = np.where(eig < _EIG_CLAMP, 0.0, eig)
    val = float(diff @ diff + np.trace(cov1) + np.trace(cov2) - 2.0 * np.sum(np.sqrt(eig)))
    if val < -1e-8:
        raise ValueError(f"Frechet distance came out {val}; inputs not PSD enough")
    return max(val, 0.0)


def pixel_embedding(img: Raster, side: int = 8) -> np.ndarray:
    """Grayscale thumbnail flattened to a side*side vector."""
    if side < 1:
        raise ValueError("embedding side must be >= 1")
    gray = to_gray(img)
    small = bilinear_resample(gray, side, side)
    return small.data[:, :, 0].reshape(-1).copy()


@dataclass(frozen=True)
class MetricsRow:
    """One report row: a proportion bucket, Total, or the degenerate tail."""

    bucket: str
    n: int
    mae: Optional[float] = None
    ssim: Optional[float] = None
    psnr: Optional[float] = None
    frechet: Optional[float] = None


@dataclass(frozen=True)
class MetricsReport:
    rows: tuple[MetricsRow, ...]
