"""Patch-attention reconstruction of masked feature regions.

A feature map is cut into p x p patches on a stride-s grid (the right and
bottom remainders get a final patch flush with the border). Patches are
split into a fully-known set and a set touching missing pixels; each
missing patch is rebuilt as a temperature-softmax weighted average of
known patches, weighted by cosine similarity of encoded patch vectors.
The default encoder zero-fills missing positions and rescales by the
known-pixel count, so similarity only uses positions the missing patch
actually knows. A coarse-to-fine wrapper turns the same machinery into a
patch-based inpainter for plain images.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .raster import BinaryMask, Raster

SIM_EPS = 1e-8

# encoder: (vectors (n, d), known flags (n, d)) -> encoded (n, d)
Encoder = Callable[[np.ndarray, np.ndarray], np.ndarray]
# local loss: (reconstructed patch, reference patch) -> float
LocalLoss = Callable[[np.ndarray, np.ndarray], float]


def masked_identity_encoder(vectors: np.ndarray, known: np.ndarray) -> np.ndarray:
    """Zero-fill unknown positions, rescale by the known fraction.

    The rescale keeps encoded magnitudes comparable across patches with
    different amounts of context; cosine similarity itself is scale
    invariant, so only the zero-fill changes the similarities.
    """
    counts = known.sum(axis=1).astype(np.float64)
    scale = np.zeros_like(counts)
    nonzero = counts > 0
    scale[nonzero] = vectors.shape[1] / counts[nonzero]
    return vectors * known * scale[:, None]


def plain_encoder(vectors: np.ndarray, known: np.ndarray) -> np.ndarray:
    return vectors


def mean_abs_local_loss(reconstructed: np.ndarray, reference: np.ndarray) -> float:
    return float(np.mean(np.abs(reconstructed - reference)))


@dataclass(frozen=True)
class CRConfig:
    alpha: float = 10.0
    patch: int = 8
    stride: int = 4
    encoder: Optional[Encoder] = None  # None -> masked_identity_encoder
    local_loss: Optional[LocalLoss] = None  # None -> mean absolute difference

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.patch < 1:
            raise ValueError("patch side must be >= 1")
        if not 1 <= self.stride <= self.patch:
            raise ValueError("stride must satisfy 1 <= stride <= patch")


@dataclass(frozen=True)
class PatchGrid:
    source: np.ndarray          # (H, W, C)
    patch: int
    stride: int
    positions: np.ndarray       # (P, 2) top-left (y, x), row-major order
    vectors: np.ndarray         # (P, patch*patch*C), (y, x, c) flattening
    known_flags: np.ndarray     # (P, patch*patch*C) bool, True = known pixel
    known_idx: np.ndarray       # indices into positions: fully known patches
    missing_idx: np.ndarray     # indices: patches containing missing pixels


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray          # (|missing|, |known|) cosine similarities


def grid_positions(size: int, patch: int, stride: int) -> np.ndarray:
    """Stride grid along one axis, plus a flush patch at the far border."""
    last = size - patch
    pos = list(range(0, last + 1, stride))
    if pos[-1] != last:
        pos.append(last)
    return np.asarray(pos, dtype=np.int64)


def extract_patches(feature: np.ndarray, mask: BinaryMask, cfg: CRConfig) -> PatchGrid:
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 3:
        raise ValueError("feature map must be HxWxC")
    h, w, c = feature.shape
    if (mask.height, mask.width) != (h, w):
        raise ValueError("mask dimensions must match the feature map")
    p = cfg.patch
    if h < p or w < p:
        raise ValueError("feature map smaller than one patch")

    ys = grid_positions(h, p, cfg.stride)
    xs = grid_positions(w, p, cfg.stride)
    n_patches = ys.size * xs.size
    positions = np.empty((n_patches, 2), dtype=np.int64)
    vectors = np.empty((n_patches, p * p * c), dtype=np.float64)
    known_flags = np.empty((n_patches, p * p * c), dtype=np.bool_)
    known = ~mask.bits  # True where the pixel is known

    idx = 0
    for y in ys:
        for x in xs:
            positions[idx] = (y, x)
            vectors[idx] = feature[y:y + p, x:x + p, :].reshape(-1)
            flags = known[y:y + p, x:x + p]
            known_flags[idx] = np.repeat(flags.reshape(-1), c)
            idx += 1

    fully_known = known_flags.all(axis=1)
    return PatchGrid(
        source=feature, patch=p, stride=cfg.stride, positions=positions,
        vectors=vectors, known_flags=known_flags,
        known_idx=np.flatnonzero(fully_known),
        missing_idx=np.flatnonzero(~fully_known))


def similarity_matrix(grid: PatchGrid, cfg: CRConfig) -> SimilarityMatrix:
    """Cosine similarity of encoded patch vectors: rows = missing patches,
    columns = known patches. Norms carry an epsilon guard."""
    if grid.known_idx.size == 0:
        raise ValueError("uninpaintable: no known region")
    if grid.missing_idx.size == 0:
        raise ValueError("nothing to reconstruct")
    encoder = cfg.encoder or masked_identity_encoder
    enc_missing = encoder(grid.vectors[grid.missing_idx],
                          grid.known_flags[grid.missing_idx])
    enc_known = encoder(grid.vectors[grid.known_idx],
                        grid.known_flags[grid.known_idx])
    values = kernels.cosine_similarity_matrix(
        np.ascontiguousarray(enc_missing), np.ascontiguousarray(enc_known), SIM_EPS)
    return SimilarityMatrix(values=values)


def reconstruct_patches(grid: PatchGrid, sim: SimilarityMatrix,
                        target_feature: np.ndarray, cfg: CRConfig) -> np.ndarray:
    """Replace missing patches in the target feature map.

    Each missing patch becomes the softmax(alpha * similarity)-weighted
    average of the known target patches; overlapping replacements blend by
    uniform per-pixel averaging. Pixels covered only by known patches are
    copied through untouched.
    """
    target = np.asarray(target_feature, dtype=np.float64)
    if target.shape[:2] != grid.source.shape[:2]:
        raise ValueError("target feature map must match the grid spatially")
    p = grid.patch
    c = target.shape[2]

    known_vecs = np.stack([
        target[y:y + p, x:x + p, :].reshape(-1)
        for y, x in grid.positions[grid.known_idx]])
    weights = kernels.softmax_rows(sim.values, cfg.alpha)
    recon = weights @ known_vecs  # (|missing|, p*p*c)

    out = target.copy()
    acc = np.zeros_like(target)
    cnt = np.zeros(target.shape[:2], dtype=np.float64)
    for row, i in enumerate(grid.missing_idx):
        y, x = grid.positions[i]
        acc[y:y + p, x:x + p, :] += recon[row].reshape(p, p, c)
        cnt[y:y + p, x:x + p] += 1.0
    covered = cnt > 0
    out[covered] = acc[covered] / cnt[covered][:, None]
    return out


def cr_loss(reconstructed: np.ndarray, reference: np.ndarray,
            grid: PatchGrid, cfg: CRConfig) -> float:
    """Sum of per-patch local losses over the missing patches."""
    reconstructed = np.asarray(reconstructed, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if reconstructed.shape != reference.shape:
        raise ValueError("shape mismatch")
    loss_fn = cfg.local_loss or mean_abs_local_loss
    p = grid.patch
    total = 0.0
    for i in grid.missing_idx:
        y, x = grid.positions[i]
        total += loss_fn(reconstructed[y:y + p, x:x + p, :],
                         reference[y:y + p, x:x + p, :])
    return total


def _downsample2x_masked(img: np.ndarray, missing: np.ndarray):
    """Halve resolution; an output pixel is missing when any source pixel
    in its 2x2 block is, and its value averages only known sources."""
    h, w, c = img.shape
    oh, ow = (h + 1) // 2, (w + 1) // 2
    out = np.zeros((oh, ow, c), dtype=np.float64)
    out_missing = np.zeros((oh, ow), dtype=np.bool_)
    counts = np.zeros((oh, ow), dtype=np.float64)
    known = (~missing).astype(np.float64)
    weighted = img * known[:, :, None]
    for dy in (0, 1):
        for dx in (0, 1):
            sub_w = weighted[dy::2, dx::2]
            sub_k = known[dy::2, dx::2]
            sub_m = missing[dy::2, dx::2]
            out[:sub_w.shape[0], :sub_w.shape[1]] += sub_w
            out_missing[:sub_m.shape[0], :sub_m.shape[1]] |= sub_m
            counts[:sub_k.shape[0], :sub_k.shape[1]] += sub_k
    nonzero = counts > 0
    out[nonzero] = out[nonzero] / counts[nonzero][:, None]
    return out, out_missing


def _global_mean_fill(img: np.ndarray, missing: np.ndarray) -> np.ndarray:
    out = img.copy()
    known = ~missing
    mean = img[known].mean(axis=0)
    out[missing] = mean
    return out


def cr_inpaint(hole_image: Raster, mask: BinaryMask, cfg: CRConfig,
               pyramid_levels: int = 3) -> Raster:
    """Coarse-to-fine patch-attention inpainting on raw pixels.

    The hole image and mask are downsampled to the coarsest level, the
    missing patches are reconstructed there with masked cosine similarity,
    and the fill is upsampled level by level. At each finer level the
    known pixels are re-imposed from that level's hole image and the
    reconstruction runs again; the propagated coarse estimate fills the
    missing positions, so similarity at fine levels can match on actual
    content instead of zero-filled holes. The output equals the input
    exactly wherever the mask is False.
    """
    if (hole_image.height, hole_image.width) != (mask.height, mask.width):
        raise ValueError("mask dimensions must match the image")
    if mask.coverage >= 1.0:
        raise ValueError("uninpaintable: no known region")
    if pyramid_levels < 1:
        raise ValueError("pyramid_levels must be >= 1")
    original = hole_image.data
    if not mask.bits.any():
        return Raster(original, hole_image.space)

    levels = 1
    min_dim = min(hole_image.height, hole_image.width)
    while levels < pyramid_levels and (min_dim >> levels) >= cfg.patch:
        levels += 1

    imgs = [np.asarray(original, dtype=np.float64)]
    masks = [mask.bits.copy()]
    for _ in range(1, levels):
        down, down_missing = _downsample2x_masked(imgs[-1], masks[-1])
        if down_missing.all():
            break  # conservative mask growth ate every known pixel
        imgs.append(down)
        masks.append(down_missing)
    levels = len(imgs)

    estimate = None
    for k in range(levels - 1, -1, -1):
        level_img = imgs[k]
        level_mask = masks[k]
        if estimate is None:
            # Coarsest level: hole content is meaningless, so patches are
            # compared with the masked (zero-fill) encoder.
            composite = level_img
            level_cfg = cfg
        else:
            up = kernels.resample_bilinear(
                np.ascontiguousarray(estimate), level_img.shape[0], level_img.shape[1])
            composite = np.where(level_mask[:, :, None], up, level_img)
            level_cfg = CRConfig(alpha=cfg.alpha, patch=cfg.patch,
                                 stride=cfg.stride, encoder=plain_encoder,
                                 local_loss=cfg.local_loss)
        grid = extract_patches(composite, BinaryMask(level_mask), level_cfg)
        if grid.known_idx.size == 0:
            # Every patch touches the hole; fall back to the known-pixel mean.
            estimate = _global_mean_fill(composite, level_mask)
            continue
        sim = similarity_matrix(grid, level_cfg)
        estimate = reconstruct_patches(grid, sim, composite, level_cfg)

    out = np.where(mask.bits[:, :, None], estimate, original)
    return Raster(np.clip(out, 0.0, 1.0), hole_image.space)
