"""Float image and binary mask containers plus PNG I/O and resampling.

Samples live in [0, 1] as float64 for the whole pipeline; quantization
happens only at the PNG boundary (8-bit out, 8/16-bit in). All operations
are pure: containers are immutable after construction.

Conventions fixed here:
  * gray conversion uses BT.601 weights (0.299, 0.587, 0.114)
  * bilinear resampling is align-corners; a size-1 output axis samples
    the source centroid
  * rotation keeps the canvas size, rotates about the image center, and
    fills uncovered pixels with a constant
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels

SPACE_CHANNELS = {"Gray": 1, "RGB": 3, "RGBA": 4}
_CHANNEL_SPACE = {1: "Gray", 3: "RGB", 4: "RGBA"}

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Raster:
    """Dense H x W x C image, row-major float64 samples in [0, 1]."""

    data: np.ndarray
    space: str

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"raster data must be HxWxC, got shape {arr.shape}")
        if self.space not in SPACE_CHANNELS:
            raise ValueError(f"unknown color space {self.space!r}")
        if arr.shape[2] != SPACE_CHANNELS[self.space]:
            raise ValueError(
                f"{self.space} raster needs {SPACE_CHANNELS[self.space]} channels, "
                f"got {arr.shape[2]}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("raster samples must lie in [0, 1]")
        if arr is self.data and arr.flags.writeable:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BinaryMask:
    """H x W boolean map; True marks an occluded / missing pixel."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bits)
        if arr.ndim != 2:
            raise ValueError(f"mask must be HxW, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            raise ValueError("mask bits must be boolean")
        if arr is self.bits and arr.flags.writeable:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def coverage(self) -> float:
        return float(np.count_nonzero(self.bits)) / self.bits.size


def _clip01(arr: np.ndarray) -> np.ndarray:
    return np.clip(arr, 0.0, 1.0)


def load_png(path) -> Raster:
    """Load an 8- or 16-bit PNG with 1, 3, or 4 channels as a Raster."""
    path = Path(path)
    with Image.open(path) as im:
        if im.mode == "P":
            im = im.convert("RGBA" if "transparency" in im.info else "RGB")
        mode = im.mode
        if mode in ("L", "RGB", "RGBA"):
            arr = np.asarray(im, dtype=np.float64) / 255.0
        elif mode in ("I;16", "I"):
            # 16-bit grayscale; Pillow reports either mode for PNG gray16
            arr = np.asarray(im, dtype=np.float64) / 65535.0
        else:
            raise ValueError(f"unsupported PNG mode {mode!r} in {path}")
    if arr.ndim == 2:
        arr = arr[:, :, None]
    channels = arr.shape[2]
    if channels not in _CHANNEL_SPACE:
        raise ValueError(f"unsupported channel count {channels} in {path}")
    return Raster(_clip01(arr), _CHANNEL_SPACE[channels])


def quantize8(arr: np.ndarray) -> np.ndarray:
    """Map [0,1] samples to bytes, rounding half up."""
    return np.floor(_clip01(arr) * 255.0 + 0.5).astype(np.uint8)


def save_png(obj, path) -> None:
    """Write a Raster or BinaryMask as an 8-bit PNG (masks: True -> 255)."""
    path = Path(path)
    if isinstance(obj, BinaryMask):
        raw = np.where(obj.bits, np.uint8(255), np.uint8(0))
        im = Image.fromarray(raw, mode="L")
    elif isinstance(obj, Raster):
        raw = quantize8(obj.data)
        if obj.channels == 1:
            im = Image.fromarray(raw[:, :, 0], mode="L")
        else:
            im = Image.fromarray(raw, mode=obj.space)
    else:
        raise TypeError(f"cannot save object of type {type(obj).__name__}")
    im.save(path, format="PNG")


def load_mask(path) -> BinaryMask:
    """Read a mask PNG (0/255 convention); nonzero-ish pixels become True."""
    img = load_png(path)
    gray = img if img.space == "Gray" else to_gray(img)
    return BinaryMask(gray.data[:, :, 0] > 0.5)


def to_gray(img: Raster) -> Raster:
    """BT.601 luminance; gray input passes through, alpha is ignored."""
    if img.space == "Gray":
        return img
    r, g, b = GRAY_WEIGHTS
    y = r * img.data[:, :, 0] + g * img.data[:, :, 1] + b * img.data[:, :, 2]
    return Raster(_clip01(y)[:, :, None], "Gray")


def bilinear_resample(img: Raster, new_w: int, new_h: int) -> Raster:
    if new_w < 1 or new_h < 1:
        raise ValueError("target dimensions must be >= 1")
    out = kernels.resample_bilinear(img.data, new_h, new_w)
    return Raster(_clip01(out), img.space)


def rotate(img: Raster, angle: float, fill: float = 0.0) -> Raster:
    """Rotate about the image center on an unchanged canvas.

    Positive angles follow the convention where 90 degrees sends pixel
    (x, y) of a square image to (y, W-1-x). Out-of-source pixels take
    ``fill`` in every channel.
    """
    if not 0.0 <= fill <= 1.0:
        raise ValueError("fill must lie in [0, 1]")
    theta = math.radians(angle)
    out = kernels.rotate_bilinear(img.data, math.cos(theta), math.sin(theta), fill)
    return Raster(_clip01(out), img.space)
