"""Occlusion dataset synthesis: pair M foreground cutouts with N scene
images to produce labeled (overlay, mask, hole, ground truth) quadruples.

Every sample is a pure function of (config, pair index): the cutout is
resampled to the target frame, rotated by a per-pair random angle,
binarized into a mask, alpha-composited over the scene, and the scene is
hole-punched with the mask. Records are bucketed by occluded-pixel
proportion and split by a deterministic shuffle, so a rerun with the same
config reproduces the manifest and the image bytes exactly.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .raster import BinaryMask, Raster, bilinear_resample, load_png, rotate, save_png

MANIFEST_VERSION = 1

DEGENERATE_LABEL = "degenerate"
DEFAULT_SPLIT_NAMES = ("train", "val", "test")
EXT_TEST_SPLIT = "ext_test"


class ProportionBucket(enum.Enum):
    """Half-open occlusion-proportion intervals; 0 and 1 fall outside."""

    B1 = "(0,0.2]"
    B2 = "(0.2,0.4]"
    B3 = "(0.4,0.6]"
    B4 = "(0.6,0.8]"
    B5 = "(0.8,1.0)"

    @property
    def label(self) -> str:
        return self.value


BUCKET_ORDER = tuple(ProportionBucket)
_BUCKET_UPPER = (0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True)
class SynthesisConfig:
    scaffold_dir: str
    activity_dir: str
    target_w: int
    target_h: int
    alpha_threshold: float = 0.5
    rotation_range: tuple[float, float] = (0.0, 360.0)
    seed: int = 0
    split_fractions: tuple[float, float, float] = (0.9, 0.05, 0.05)
    hole_fill: float = 1.0

    def __post_init__(self):
        if self.target_w < 1 or self.target_h < 1:
            raise ValueError("target size must be >= 1")
        if not 0.0 < self.alpha_threshold < 1.0:
            raise ValueError("alpha_threshold must lie in (0, 1)")
        lo, hi = self.rotation_range
        if hi < lo:
            raise ValueError("rotation_range must be [lo, hi] with lo <= hi")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        fr = self.split_fractions
        if len(fr) != 3 or any(f < 0 for f in fr):
            raise ValueError("split_fractions must be three non-negative numbers")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError("split_fractions must sum to 1")
        if not 0.0 <= self.hole_fill <= 1.0:
            raise ValueError("hole_fill must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "scaffold_dir": self.scaffold_dir,
            "activity_dir": self.activity_dir,
            "target_w": self.target_w,
            "target_h": self.target_h,
            "alpha_threshold": self.alpha_threshold,
            "rotation_range": list(self.rotation_range),
            "seed": self.seed,
            "split_fractions": list(self.split_fractions),
            "hole_fill": self.hole_fill,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisConfig":
        return cls(
            scaffold_dir=d["scaffold_dir"],
            activity_dir=d["activity_dir"],
            target_w=int(d["target_w"]),
            target_h=int(d["target_h"]),
            alpha_threshold=float(d["alpha_threshold"]),
            rotation_range=tuple(float(v) for v in d["rotation_range"]),
            seed=int(d["seed"]),
            split_fractions=tuple(float(v) for v in d["split_fractions"]),
            hole_fill=float(d["hole_fill"]),
        )


_RECORD_FIELDS = ("id", "scaffold_src", "activity_src", "angle", "proportion",
                  "bucket", "split", "overlay_path", "mask_path", "hole_path",
                  "gt_path")


@dataclass(frozen=True)
class SampleRecord:
    id: str
    scaffold_src: str
    activity_src: str
    angle: float
    proportion: float
    bucket: str  # interval label or "degenerate"
    split: str
    overlay_path: Optional[str] = None
    mask_path: Optional[str] = None
    hole_path: Optional[str] = None
    gt_path: Optional[str] = None

    def to_json(self) -> str:
        d = {k: getattr(self, k) for k in _RECORD_FIELDS}
        if self.overlay_path is None:
            for k in ("overlay_path", "mask_path", "hole_path", "gt_path"):
                del d[k]
        return json.dumps(d)

    @classmethod
    def from_json(cls, line: str) -> "SampleRecord":
        d = json.loads(line)
        return cls(**{k: d.get(k) for k in _RECORD_FIELDS})


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[SampleRecord, ...]
    config_echo: dict
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.counts:
            object.__setattr__(self, "counts", manifest_counts(self))


def binarize(cutout: Raster, alpha_threshold: float) -> BinaryMask:
    """Mask of pixels whose alpha strictly exceeds the threshold."""
    if cutout.space != "RGBA":
        raise ValueError("binarize expects an RGBA cutout")
    return BinaryMask(cutout.data[:, :, 3] > alpha_threshold)


def overlay(activity: Raster, cutout: Raster) -> Raster:
    """Source-over alpha compositing of the cutout onto the scene."""
    if activity.space != "RGB" or cutout.space != "RGBA":
        raise ValueError("overlay expects an RGB scene and an RGBA cutout")
    if (activity.height, activity.width) != (cutout.height, cutout.width):
        raise ValueError("overlay inputs must share dimensions")
    out = kernels.alpha_composite(activity.data, cutout.data)
    return Raster(np.clip(out, 0.0, 1.0), "RGB")


def subtract(activity: Raster, mask: BinaryMask, hole_fill: float) -> Raster:
    """Hole-punch: masked pixels take the fill value in every channel."""
    if (activity.height, activity.width) != (mask.height, mask.width):
        raise ValueError("subtract inputs must share dimensions")
    out = np.where(mask.bits[:, :, None], hole_fill, activity.data)
    return Raster(out, activity.space)


def scaffold_proportion(mask: BinaryMask) -> float:
    return mask.coverage


def classify_bucket(proportion: float) -> Optional[ProportionBucket]:
    """Map a proportion to its Table-1 interval; 0 and 1 are degenerate."""
    if not 0.0 <= proportion <= 1.0:
        raise ValueError(f"proportion {proportion} outside [0, 1]")
    if proportion <= 0.0 or proportion >= 1.0:
        return None
    for bucket, hi in zip(BUCKET_ORDER, _BUCKET_UPPER):
        if proportion <= hi:
            return bucket
    return ProportionBucket.B5


def bucket_label(proportion: float) -> str:
    b = classify_bucket(proportion)
    return DEGENERATE_LABEL if b is None else b.label


def synthesize_sample(scaffold: Raster, activity: Raster, angle: float,
                      cfg: SynthesisConfig, *, sample_id: str = "",
                      scaffold_src: str = "", activity_src: str = "",
                      split: str = ""):
    """Render one quadruple: (overlay, mask, hole, gt, record)."""
    cutout = bilinear_resample(scaffold, cfg.target_w, cfg.target_h)
    cutout = rotate(cutout, angle, fill=0.0)
    mask = binarize(cutout, cfg.alpha_threshold)
    gt = _as_rgb(bilinear_resample(activity, cfg.target_w, cfg.target_h))
    over = overlay(gt, cutout)
    hole = subtract(gt, mask, cfg.hole_fill)
    proportion = scaffold_proportion(mask)
    record = SampleRecord(
        id=sample_id, scaffold_src=scaffold_src, activity_src=activity_src,
        angle=angle, proportion=proportion, bucket=bucket_label(proportion),
        split=split)
    return over, mask, hole, gt, record


def _as_rgb(img: Raster) -> Raster:
    if img.space == "RGB":
        return img
    if img.space == "Gray":
        return Raster(np.repeat(img.data, 3, axis=2), "RGB")
    return Raster(img.data[:, :, :3], "RGB")  # RGBA: drop alpha


def _list_pngs(directory: str) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise ValueError(f"not a directory: {directory}")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise ValueError(f"no PNG files in {directory}")
    return files


def split_sizes(total: int, fractions) -> list[int]:
    """Largest-remainder apportionment; sizes sum to ``total`` exactly."""
    raw = [f * total for f in fractions]
    sizes = [int(np.floor(r)) for r in raw]
    short = total - sum(sizes)
    remainders = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in remainders[:short]:
        sizes[i] += 1
    return sizes


def _pair_rng(seed: int, pair_index: int) -> np.random.Generator:
    return np.random.default_rng((seed, 0, pair_index))


def _split_assignment(seed: int, total: int, fractions, names) -> list[str]:
    sizes = split_sizes(total, fractions)
    perm = np.random.default_rng((seed, 1)).permutation(total)
    assignment = [""] * total
    start = 0
    for name, size in zip(names, sizes):
        for idx in perm[start:start + size]:
            assignment[idx] = name
        start += size
    return assignment


def synthesize_dataset(cfg: SynthesisConfig, manifest_only: bool = False,
                       out_dir=None,
                       split_names=DEFAULT_SPLIT_NAMES) -> DatasetManifest:
    """Render (or tabulate) the full M x N pairing.

    In manifest-only mode masks are still rendered in memory so every
    record carries its exact proportion, but nothing is written to disk.
    Otherwise quadruples land in out_dir/{overlay,mask,hole,gt}/<id>.png.
    """
    scaffold_paths = _list_pngs(cfg.scaffold_dir)
    activity_paths = _list_pngs(cfg.activity_dir)
    m, n = len(scaffold_paths), len(activity_paths)
    total = m * n
    lo, hi = cfg.rotation_range

    if not manifest_only:
        if out_dir is None:
            raise ValueError("out_dir is required when rendering images")
        out_dir = Path(out_dir)
        for sub in ("overlay", "mask", "hole", "gt"):
            (out_dir / sub).mkdir(parents=True, exist_ok=True)

    assignment = _split_assignment(cfg.seed, total, cfg.split_fractions, split_names)

    records: list[SampleRecord] = []
    if manifest_only:
        # Proportions need only the cutout alpha plane: resample it once per
        # scaffold, rotate per pair, threshold, count.
        for i, spath in enumerate(scaffold_paths):
            scaffold = load_png(spath)
            if scaffold.space != "RGBA":
                raise ValueError(f"scaffold cutout {spath} is not RGBA")
            alpha = kernels.resample_bilinear(
                np.ascontiguousarray(scaffold.data[:, :, 3:4]),
                cfg.target_h, cfg.target_w)
            for j, apath in enumerate(activity_paths):
                pair = i * n + j
                angle = float(_pair_rng(cfg.seed, pair).uniform(lo, hi))
                theta = math.radians(angle)
                rotated = kernels.rotate_bilinear(
                    alpha, math.cos(theta), math.sin(theta), 0.0)
                bits = rotated[:, :, 0] > cfg.alpha_threshold
                proportion = float(np.count_nonzero(bits)) / bits.size
                records.append(SampleRecord(
                    id=_sample_id(i, j), scaffold_src=str(spath),
                    activity_src=str(apath), angle=angle,
                    proportion=proportion, bucket=bucket_label(proportion),
                    split=assignment[pair]))
    else:
        activity_cache: dict[int, Raster] = {}
        for i, spath in enumerate(scaffold_paths):
            scaffold = load_png(spath)
            if scaffold.space != "RGBA":
                raise ValueError(f"scaffold cutout {spath} is not RGBA")
            for j, apath in enumerate(activity_paths):
                if j not in activity_cache:
                    activity_cache[j] = load_png(apath)
                pair = i * n + j
                angle = float(_pair_rng(cfg.seed, pair).uniform(lo, hi))
                sid = _sample_id(i, j)
                over, mask, hole, gt, record = synthesize_sample(
                    scaffold, activity_cache[j], angle, cfg, sample_id=sid,
                    scaffold_src=str(spath), activity_src=str(apath),
                    split=assignment[pair])
                paths = {kind: f"{kind}/{sid}.png"
                         for kind in ("overlay", "mask", "hole", "gt")}
                save_png(over, out_dir / paths["overlay"])
                save_png(mask, out_dir / paths["mask"])
                save_png(hole, out_dir / paths["hole"])
                save_png(gt, out_dir / paths["gt"])
                records.append(replace(
                    record, overlay_path=paths["overlay"],
                    mask_path=paths["mask"], hole_path=paths["hole"],
                    gt_path=paths["gt"]))

    return DatasetManifest(records=tuple(records), config_echo=cfg.to_dict())


def _sample_id(i: int, j: int) -> str:
    return f"s{i:04d}_a{j:04d}"


def manifest_counts(manifest: DatasetManifest) -> dict[str, int]:
    """Tallies keyed "split|bucket"; degenerates get their own column."""
    counts: dict[str, int] = {}
    for rec in manifest.records:
        key = f"{rec.split}|{rec.bucket}"
        counts[key] = counts.get(key, 0) + 1
    return counts


def counts_table(manifest: DatasetManifest) -> str:
    """Render per-split bucket tallies in interval order, plus totals."""
    counts = manifest_counts(manifest)
    splits: list[str] = []
    for rec in manifest.records:
        if rec.split not in splits:
            splits.append(rec.split)
    columns = [b.label for b in BUCKET_ORDER] + [DEGENERATE_LABEL, "total"]
    widths = [max(10, len(c) + 2) for c in columns]
    head = "split".ljust(12) + "".join(c.rjust(w) for c, w in zip(columns, widths))
    lines = [head]
    for split in splits:
        row = [counts.get(f"{split}|{label}", 0)
               for label in ([b.label for b in BUCKET_ORDER] + [DEGENERATE_LABEL])]
        row.append(sum(row))
        lines.append(split.ljust(12)
                     + "".join(str(v).rjust(w) for v, w in zip(row, widths)))
    return "\n".join(lines)


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    header = {
        "format_version": MANIFEST_VERSION,
        "kind": "descaffold-manifest",
        "config": manifest.config_echo,
        "counts": manifest.counts,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in manifest.records:
            fh.write(rec.to_json() + "\n")


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise ValueError(f"empty manifest: {path}")
        header = json.loads(header_line)
        if header.get("kind") != "descaffold-manifest":
            raise ValueError(f"not a manifest file: {path}")
        if header.get("format_version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version in {path}")
        records = tuple(SampleRecord.from_json(line) for line in fh if line.strip())
    manifest = DatasetManifest(records=records, config_echo=header["config"])
    if manifest.counts != header["counts"]:
        raise ValueError(f"manifest counts are stale in {path}")
    return manifest
