"""Shared fixtures: procedural source images and rendered desk datasets."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from descaffold.raster import BinaryMask, Raster, save_png
from descaffold.synthesis import SynthesisConfig, save_manifest, synthesize_dataset


def make_scene(idx: int, h: int, w: int) -> Raster:
    """Deterministic textured RGB scene: gradient plus stripes plus blobs."""
    rng = np.random.default_rng((1234, idx))
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    yy /= max(h - 1, 1)
    xx /= max(w - 1, 1)
    gx, gy = rng.uniform(-1, 1, size=2)
    period = rng.uniform(6, 18)
    phase = rng.uniform(0, 2 * math.pi)
    stripes = 0.5 + 0.5 * np.sin(2 * math.pi * (xx * w) / period + phase)
    grad = 0.5 + 0.5 * (gx * xx + gy * yy) / 2.0
    blob_y, blob_x = rng.uniform(0.2, 0.8, size=2)
    blob = np.exp(-(((yy - blob_y) ** 2 + (xx - blob_x) ** 2) / 0.02))
    chans = [
        0.55 * grad + 0.35 * stripes + 0.10 * blob,
        0.45 * grad + 0.30 * stripes + 0.25 * blob,
        0.60 * grad + 0.25 * stripes + 0.15 * blob,
    ]
    data = np.clip(np.stack(chans, axis=2), 0.0, 1.0)
    return Raster(data, "RGB")


def make_square_cutout(coverage: float, h: int, w: int, value: float = 0.2) -> Raster:
    """RGBA cutout: a centered opaque square covering ~coverage of the frame."""
    side = int(round(math.sqrt(coverage * h * w)))
    side = max(1, min(side, min(h, w)))
    data = np.zeros((h, w, 4), dtype=np.float64)
    y0 = (h - side) // 2
    x0 = (w - side) // 2
    data[y0:y0 + side, x0:x0 + side, :3] = value
    data[y0:y0 + side, x0:x0 + side, 3] = 1.0
    return Raster(data, "RGBA")


def make_lattice_cutout(idx: int, h: int, w: int) -> Raster:
    """RGBA cutout resembling crossed bars, with soft edges."""
    rng = np.random.default_rng((777, idx))
    alpha = np.zeros((h, w), dtype=np.float64)
    n_bars = rng.integers(2, 5)
    for _ in range(n_bars):
        pos = int(rng.integers(0, h))
        width = int(rng.integers(2, max(3, h // 10)))
        alpha[max(0, pos - width // 2):pos + width // 2 + 1, :] = 1.0
        pos = int(rng.integers(0, w))
        alpha[:, max(0, pos - width // 2):pos + width // 2 + 1] = 1.0
    data = np.zeros((h, w, 4), dtype=np.float64)
    data[:, :, 0] = 0.35 * alpha
    data[:, :, 1] = 0.32 * alpha
    data[:, :, 2] = 0.30 * alpha
    data[:, :, 3] = alpha
    return Raster(data, "RGBA")


def write_sources(root: Path, cutouts, scenes) -> tuple[Path, Path]:
    scaffold_dir = root / "scaffolds"
    activity_dir = root / "activities"
    scaffold_dir.mkdir(parents=True, exist_ok=True)
    activity_dir.mkdir(parents=True, exist_ok=True)
    for i, c in enumerate(cutouts):
        save_png(c, scaffold_dir / f"cut{i:04d}.png")
    for i, s in enumerate(scenes):
        save_png(s, activity_dir / f"scene{i:04d}.png")
    return scaffold_dir, activity_dir


@pytest.fixture(scope="session")
def desk_dataset(tmp_path_factory):
    """Rendered 5x6 dataset with random rotations: 30 quadruples at 96x96."""
    root = tmp_path_factory.mktemp("desk")
    size = 96
    cutouts = [make_lattice_cutout(i, size, size) for i in range(3)]
    cutouts += [make_square_cutout(c, size, size) for c in (0.15, 0.45)]
    scenes = [make_scene(i, size, size) for i in range(6)]
    scaffold_dir, activity_dir = write_sources(root, cutouts, scenes)
    cfg = SynthesisConfig(
        scaffold_dir=str(scaffold_dir), activity_dir=str(activity_dir),
        target_w=size, target_h=size, seed=42,
        split_fractions=(0.0, 0.0, 1.0))
    out_dir = root / "out"
    manifest = synthesize_dataset(cfg, out_dir=out_dir)
    manifest_path = out_dir / "manifest.jsonl"
    save_manifest(manifest, manifest_path)
    return {"cfg": cfg, "manifest": manifest, "manifest_path": manifest_path,
            "out_dir": out_dir, "root": root,
            "scaffold_dir": scaffold_dir, "activity_dir": activity_dir}


@pytest.fixture(scope="session")
def trend_dataset(tmp_path_factory):
    """Rendered 4x24 dataset, angle 0, one coverage level per bucket."""
    root = tmp_path_factory.mktemp("trend")
    size = 128
    coverages = (0.10, 0.30, 0.50, 0.70)
    cutouts = [make_square_cutout(c, size, size) for c in coverages]
    scenes = [make_scene(100 + i, size, size) for i in range(24)]
    scaffold_dir, activity_dir = write_sources(root, cutouts, scenes)
    cfg = SynthesisConfig(
        scaffold_dir=str(scaffold_dir), activity_dir=str(activity_dir),
        target_w=size, target_h=size, seed=7, rotation_range=(0.0, 0.0),
        split_fractions=(0.0, 0.0, 1.0))
    out_dir = root / "out"
    manifest = synthesize_dataset(cfg, out_dir=out_dir)
    manifest_path = out_dir / "manifest.jsonl"
    save_manifest(manifest, manifest_path)
    return {"cfg": cfg, "manifest": manifest, "manifest_path": manifest_path,
            "out_dir": out_dir, "root": root}


def random_mask(rng: np.random.Generator, h: int, w: int, p: float = 0.5) -> BinaryMask:
    return BinaryMask(rng.random((h, w)) < p)
