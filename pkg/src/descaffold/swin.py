"""Shifted-window attention geometry and hierarchical shape calculus.

Index algebra only: window partition and its inverse, cyclic shifts, the
cross-region attention masks used by shifted windows, a reference
single-head attention forward with caller-supplied projections, and the
stage / pyramid shape propagation for a hierarchical backbone. No learned
weights, normalization, or position bias live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

PAD_LABEL = -1
DEFAULT_PPM_SCALES = (1, 2, 3, 6)


@dataclass(frozen=True)
class BackboneConfig:
    blocks_per_stage: tuple[int, int, int, int] = (2, 2, 18, 2)
    base_dim: int = 128
    window: int = 7
    patch_embed: int = 4

    def __post_init__(self):
        if any(b < 1 for b in self.blocks_per_stage):
            raise ValueError("block counts must be positive")
        if self.base_dim < 1 or self.window < 1 or self.patch_embed < 1:
            raise ValueError("dimensions must be positive")


@dataclass(frozen=True)
class WindowLayout:
    height: int
    width: int
    window: int
    padded_h: int
    padded_w: int
    origins: tuple[tuple[int, int], ...]  # row-major window top-lefts
    pad_mask: np.ndarray                  # (padded_h, padded_w) True = padding


@dataclass(frozen=True)
class StageShapes:
    stages: tuple[tuple[int, int, int], ...]
    degenerate: tuple[bool, ...]


@dataclass(frozen=True)
class PyramidShapes:
    levels: tuple[tuple[int, int, int], ...]
    fused: tuple[int, int, int]
    ppm_grids: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class AttentionParams:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    scale: float


def window_partition(tokens: np.ndarray, window: int):
    """Zero-pad to window multiples and cut into row-major windows.

    Returns (layout, windows) where each window is a (window*window, C)
    array in row-major token order.
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 3:
        raise ValueError("token map must be HxWxC")
    h, w, c = tokens.shape
    ph = math.ceil(h / window) * window
    pw = math.ceil(w / window) * window
    padded = np.zeros((ph, pw, c), dtype=np.float64)
    padded[:h, :w] = tokens
    pad_mask = np.ones((ph, pw), dtype=np.bool_)
    pad_mask[:h, :w] = False

    origins = []
    windows = []
    for wy in range(ph // window):
        for wx in range(pw // window):
            y, x = wy * window, wx * window
            origins.append((y, x))
            windows.append(padded[y:y + window, x:x + window, :]
                           .reshape(window * window, c).copy())
    layout = WindowLayout(height=h, width=w, window=window, padded_h=ph,
                          padded_w=pw, origins=tuple(origins), pad_mask=pad_mask)
    return layout, windows


def window_merge(layout: WindowLayout, windows) -> np.ndarray:
    """Exact inverse of window_partition; padding is discarded."""
    if len(windows) != len(layout.origins):
        raise ValueError("window count does not match the layout")
    win = layout.window
    c = np.asarray(windows[0]).shape[-1]
    padded = np.zeros((layout.padded_h, layout.padded_w, c), dtype=np.float64)
    for (y, x), block in zip(layout.origins, windows):
        block = np.asarray(block, dtype=np.float64)
        if block.shape != (win * win, c):
            raise ValueError("window shape does not match the layout")
        padded[y:y + win, x:x + win, :] = block.reshape(win, win, c)
    return padded[:layout.height, :layout.width, :]


def cyclic_shift(tokens: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Toroidal roll: output(y, x) = input((y - dy) mod H, (x - dx) mod W)."""
    return np.roll(np.asarray(tokens), (dy, dx), axis=(0, 1))


def region_labels(h: int, w: int, window: int, shift: int) -> np.ndarray:
    """Origin-contiguity labels on the padded canvas for a given shift.

    The canvas is sliced 3x3 at offsets (-window, -shift) per axis, the
    standard construction whose direct partition matches the content
    grouping of a map rolled up-left by ``shift``. Padding gets PAD_LABEL.
    """
    ph = math.ceil(h / window) * window
    pw = math.ceil(w / window) * window
    labels = np.zeros((ph, pw), dtype=np.int64)
    if shift > 0:
        slices_h = ((0, ph - window), (ph - window, ph - shift), (ph - shift, ph))
        slices_w = ((0, pw - window), (pw - window, pw - shift), (pw - shift, pw))
        tag = 0
        for y0, y1 in slices_h:
            for x0, x1 in slices_w:
                labels[y0:y1, x0:x1] = tag
                tag += 1
    labels[h:, :] = PAD_LABEL
    labels[:, w:] = PAD_LABEL
    return labels


def shifted_attention_mask(h: int, w: int, window: int,
                           shift: int | None = None) -> list[np.ndarray]:
    """Per-window additive masks for shifted-window attention.

    Entries are 0.0 where a token pair may attend and -inf where the pair
    crosses region labels or touches padding. ``shift`` defaults to
    window // 2; shift 0 gives the unshifted (single-region) masks. Maps
    narrower than the window along one axis are padded (strip geometry);
    a window exceeding both extents is rejected.
    """
    if window > h and window > w:
        raise ValueError("window larger than the token map")
    if shift is None:
        shift = window // 2
    labels = region_labels(h, w, window, shift)
    masks = []
    for wy in range(labels.shape[0] // window):
        for wx in range(labels.shape[1] // window):
            block = labels[wy * window:(wy + 1) * window,
                           wx * window:(wx + 1) * window].reshape(-1)
            same = block[:, None] == block[None, :]
            pad = block == PAD_LABEL
            blocked = ~same | pad[:, None] | pad[None, :]
            mask = np.where(blocked, -np.inf, 0.0)
            masks.append(mask)
    return masks


def _masked_softmax(z: np.ndarray) -> np.ndarray:
    """Row softmax tolerating -inf entries; all-blocked rows become zero."""
    out = np.zeros_like(z)
    hi = z.max(axis=1)
    live = np.isfinite(hi)
    if np.any(live):
        zz = z[live] - hi[live][:, None]
        e = np.where(np.isneginf(zz), 0.0, np.exp(zz))
        out[live] = e / e.sum(axis=1, keepdims=True)
    return out


def windowed_attention(windows, masks, params: AttentionParams):
    """Reference single-head attention: softmax(scale*QK^T + mask) V."""
    if len(windows) != len(masks):
        raise ValueError("window and mask counts differ")
    outputs = []
    for block, mask in zip(windows, masks):
        block = np.asarray(block, dtype=np.float64)
        if block.shape[1] != params.wq.shape[0]:
            raise ValueError("projection dimension does not match tokens")
        q = block @ params.wq
        k = block @ params.wk
        v = block @ params.wv
        z = params.scale * (q @ k.T) + mask
        outputs.append(_masked_softmax(z) @ v)
    return outputs


def backbone_shapes(input_h: int, input_w: int, cfg: BackboneConfig) -> StageShapes:
    """Stage resolutions and widths: stage i sits at input/(embed*2^(i-1))
    with base_dim*2^(i-1) channels. Stages that would drop below one token
    are flagged degenerate rather than rejected."""
    if input_h % cfg.patch_embed or input_w % cfg.patch_embed:
        raise ValueError(f"input size must be divisible by {cfg.patch_embed}")
    stages = []
    degenerate = []
    for i in range(4):
        div = cfg.patch_embed * (2 ** i)
        stages.append((input_h // div, input_w // div, cfg.base_dim * (2 ** i)))
        degenerate.append(input_h < div or input_w < div)
    return StageShapes(stages=tuple(stages), degenerate=tuple(degenerate))


def pyramid_shapes(stages: StageShapes, fused_dim: int,
                   ppm_scales=DEFAULT_PPM_SCALES) -> PyramidShapes:
    """Pyramid levels mirror the stage resolutions at ``fused_dim``
    channels; the fused map sits at the first stage's resolution."""
    levels = tuple((h, w, fused_dim) for h, w, _ in stages.stages)
    top_c = stages.stages[-1][2]
    grids = tuple((g, g, top_c) for g in ppm_scales)
    fused = (stages.stages[0][0], stages.stages[0][1], fused_dim)
    return PyramidShapes(levels=levels, fused=fused, ppm_grids=grids)


def adaptive_average_pool(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Average pooling over the standard adaptive bin edges; pooling to
    the input's own size is the identity."""
    x = np.asarray(x, dtype=np.float64)
    h, w, c = x.shape
    out = np.empty((out_h, out_w, c), dtype=np.float64)
    for i in range(out_h):
        y0 = (i * h) // out_h
        y1 = math.ceil((i + 1) * h / out_h)
        for j in range(out_w):
            x0 = (j * w) // out_w
            x1 = math.ceil((j + 1) * w / out_w)
            out[i, j] = x[y0:y1, x0:x1].mean(axis=(0, 1))
    return out


def fuse_pyramid(stage_maps, ppm_scales=DEFAULT_PPM_SCALES) -> np.ndarray:
    """Numeric smoke-test fusion path: identity laterals, bilinear
    upsampling, per-pixel means. All stage maps must share channels."""
    maps = [np.asarray(m, dtype=np.float64) for m in stage_maps]
    c = maps[0].shape[2]
    if any(m.shape[2] != c for m in maps):
        raise ValueError("stage maps must share a channel count")
    top = maps[-1]
    pooled = [top]
    for g in ppm_scales:
        grid = adaptive_average_pool(top, g, g)
        pooled.append(kernels.resample_bilinear(
            np.ascontiguousarray(grid), top.shape[0], top.shape[1]))
    fused = np.mean(np.stack(pooled), axis=0)
    for lateral in maps[-2::-1]:
        up = kernels.resample_bilinear(
            np.ascontiguousarray(fused), lateral.shape[0], lateral.shape[1])
        fused = (up + lateral) / 2.0
    return fused
