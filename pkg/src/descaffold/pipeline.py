"""Two-step pipeline composition: segment, inpaint, evaluate, report.

Providers stand in for trained networks: the oracle segmenter returns the
stored ground-truth mask, the threshold baseline applies a luminance rule,
and external masks come from files. Inpainters are the patch-attention
filler and an iterative neighbour-averaging baseline; a debug identity
provider (returns ground truth) exists only for end-to-end audits. Every
provider's output is composited so known pixels pass through bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .crkernel import CRConfig, cr_inpaint
from .metrics import (MetricsReport, MetricsRow, fit_gaussian, frechet_distance,
                      mae, miou, pixel_embedding, psnr, ssim)
from .raster import BinaryMask, Raster, load_mask, load_png, save_png, to_gray
from .synthesis import (BUCKET_ORDER, DEGENERATE_LABEL, DatasetManifest,
                        SampleRecord, load_manifest)

REPORT_VERSION = 1
TOTAL_LABEL = "Total"
CSV_COLUMNS = ("dataset", "bucket", "n", "mae", "ssim", "psnr", "frechet_pixel")

SEGMENTER_KINDS = ("oracle", "external", "threshold")
INPAINTER_KINDS = ("cr-patch", "diffusion-fill", "identity")


@dataclass(frozen=True)
class SegmenterSpec:
    kind: str
    mask_dir: Optional[str] = None      # external: directory of <id>.png masks
    threshold: float = 0.5              # threshold baseline parameters
    threshold_op: str = "lt"            # "lt": dark pixels are occluders

    def __post_init__(self):
        if self.kind not in SEGMENTER_KINDS:
            raise ValueError(f"unknown segmenter kind {self.kind!r}")
        if self.threshold_op not in ("lt", "gt"):
            raise ValueError("threshold_op must be 'lt' or 'gt'")

    def describe(self) -> str:
        if self.kind == "threshold":
            return f"threshold(op={self.threshold_op},t={self.threshold})"
        if self.kind == "external":
            return f"external(mask_dir={self.mask_dir})"
        return self.kind


@dataclass(frozen=True)
class InpainterSpec:
    kind: str
    cr: CRConfig = field(default_factory=CRConfig)
    pyramid_levels: int = 3
    max_iters: int = 500                # diffusion baseline
    epsilon: float = 1e-4

    def __post_init__(self):
        if self.kind not in INPAINTER_KINDS:
            raise ValueError(f"unknown inpainter kind {self.kind!r}")
        if self.max_iters < 1 or self.epsilon <= 0:
            raise ValueError("diffusion parameters out of range")

    def describe(self) -> str:
        if self.kind == "cr-patch":
            return (f"cr-patch(alpha={self.cr.alpha},patch={self.cr.patch},"
                    f"stride={self.cr.stride},levels={self.pyramid_levels})")
        if self.kind == "diffusion-fill":
            return f"diffusion-fill(max_iters={self.max_iters},eps={self.epsilon})"
        return self.kind


@dataclass(frozen=True)
class EvalConfig:
    embed_side: int = 8
    dataset_name: str = "dataset"
    seed: int = 0
    split: Optional[str] = None          # None evaluates every record
    save_restored_dir: Optional[str] = None


@dataclass(frozen=True)
class RunReport:
    report: MetricsReport
    provenance: dict
    failures: tuple[tuple[str, str], ...] = ()


def segment(image: Raster, spec: SegmenterSpec, context: Optional[dict] = None) -> BinaryMask:
    """Predict an occlusion mask for an image via the configured provider."""
    context = context or {}
    if spec.kind == "oracle":
        gt = context.get("gt_mask")
        if gt is None:
            raise ValueError("oracle segmenter needs a manifest ground-truth mask")
        return gt
    if spec.kind == "external":
        path = context.get("mask_path")
        if path is None:
            if spec.mask_dir is None or "id" not in context:
                raise ValueError("external segmenter needs a mask path")
            path = Path(spec.mask_dir) / f"{context['id']}.png"
        mask = load_mask(path)
        if (mask.height, mask.width) != (image.height, image.width):
            raise ValueError("external mask dimensions do not match the image")
        return mask
    luma = to_gray(image).data[:, :, 0]
    if spec.threshold_op == "lt":
        return BinaryMask(luma < spec.threshold)
    return BinaryMask(luma > spec.threshold)


def inpaint(hole: Raster, mask: BinaryMask, spec: InpainterSpec) -> Raster:
    """Fill masked pixels; unmasked pixels are passed through exactly."""
    if (hole.height, hole.width) != (mask.height, mask.width):
        raise ValueError("mask dimensions must match the image")
    if mask.coverage >= 1.0:
        raise ValueError("uninpaintable: no known region")
    if spec.kind == "identity":
        raise ValueError("identity inpainter is an eval-only debug provider")
    if spec.kind == "cr-patch":
        filled = cr_inpaint(hole, mask, spec.cr, spec.pyramid_levels)
        out = filled.data
    else:
        init = hole.data[~mask.bits].mean(axis=0)
        out = kernels.diffusion_fill(hole.data, mask.bits, init,
                                     spec.max_iters, spec.epsilon)
        out = np.clip(out, 0.0, 1.0)
    # Contract: restored equals the input wherever the mask is False.
    out = np.where(mask.bits[:, :, None], out, hole.data)
    return Raster(out, hole.space)


def _manifest_digest(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve(base: Path, rel: Optional[str], record_id: str, kind: str) -> Path:
    if rel is None:
        raise ValueError(f"record {record_id} has no {kind} file (manifest-only?)")
    return base / rel


def evaluate_run(manifest_path, seg: SegmenterSpec, inp: InpainterSpec,
                 cfg: EvalConfig) -> RunReport:
    """Segment, inpaint, and score every manifest record.

    Per record: predict a mask from the overlay, fill the hole image with
    it, and compare the restoration against ground truth. Per-image MAE,
    SSIM, and PSNR average within each proportion bucket; the Frechet
    column compares the restored and ground-truth embedding distributions
    per bucket. Failing records are quarantined and counted, not fatal.
    Output is a pure function of (manifest bytes, specs, config).
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    save_dir = Path(cfg.save_restored_dir) if cfg.save_restored_dir else None
    if save_dir is not None:
        save_dir.mkdir(parents=True, exist_ok=True)

    records = [r for r in manifest.records
               if cfg.split is None or r.split == cfg.split]

    per_bucket: dict[str, dict[str, list]] = {}
    degenerate_n = 0
    miou_values: list[float] = []
    failures: list[tuple[str, str]] = []

    for rec in records:
        try:
            result = _evaluate_record(rec, base, seg, inp, cfg, save_dir)
        except Exception as exc:  # quarantine, keep the batch alive
            failures.append((rec.id, str(exc)))
            continue
        if result is None:
            degenerate_n += 1
            continue
        rec_miou, rec_mae, rec_ssim, rec_psnr, emb_restored, emb_gt = result
        miou_values.append(rec_miou)
        slot = per_bucket.setdefault(rec.bucket, {
            "mae": [], "ssim": [], "psnr": [], "emb_r": [], "emb_g": []})
        slot["mae"].append(rec_mae)
        slot["ssim"].append(rec_ssim)
        slot["psnr"].append(rec_psnr)
        slot["emb_r"].append(emb_restored)
        slot["emb_g"].append(emb_gt)

    rows = []
    all_slot = {"mae": [], "ssim": [], "psnr": [], "emb_r": [], "emb_g": []}
    for bucket in BUCKET_ORDER:
        slot = per_bucket.get(bucket.label)
        if not slot:
            continue
        rows.append(_bucket_row(bucket.label, slot))
        for key in all_slot:
            all_slot[key].extend(slot[key])
    rows.append(_bucket_row(TOTAL_LABEL, all_slot))
    if degenerate_n:
        rows.append(MetricsRow(bucket=DEGENERATE_LABEL, n=degenerate_n))

    provenance = {
        "report_version": REPORT_VERSION,
        "dataset": cfg.dataset_name,
        "seed": cfg.seed,
        "split": cfg.split if cfg.split is not None else "all",
        "manifest_digest": _manifest_digest(manifest_path),
        "segmenter": seg.describe(),
        "inpainter": inp.describe(),
        "embed_side": cfg.embed_side,
        "backend": kernels.active_backend(),
        "miou_mean": float(np.mean(miou_values)) if miou_values else math.nan,
        "evaluated": sum(r.n for r in rows if r.bucket == TOTAL_LABEL),
        "degenerate": degenerate_n,
        "failed": len(failures),
    }
    return RunReport(report=MetricsReport(rows=tuple(rows)),
                     provenance=provenance, failures=tuple(failures))


def _evaluate_record(rec: SampleRecord, base: Path, seg: SegmenterSpec,
                     inp: InpainterSpec, cfg: EvalConfig,
                     save_dir: Optional[Path]):
    if rec.bucket == DEGENERATE_LABEL:
        return None
    gt = load_png(_resolve(base, rec.gt_path, rec.id, "gt"))
    gt_mask = load_mask(_resolve(base, rec.mask_path, rec.id, "mask"))
    overlay = load_png(_resolve(base, rec.overlay_path, rec.id, "overlay"))
    hole = load_png(_resolve(base, rec.hole_path, rec.id, "hole"))

    context = {"gt_mask": gt_mask, "id": rec.id}
    pred_mask = segment(overlay, seg, context)
    rec_miou = miou(pred_mask, gt_mask)

    if inp.kind == "identity":
        # Debug provider: ground truth composited over the hole image.
        data = np.where(pred_mask.bits[:, :, None], gt.data, hole.data)
        restored = Raster(data, hole.space)
    else:
        restored = inpaint(hole, pred_mask, inp)
    if save_dir is not None:
        save_png(restored, save_dir / f"{rec.id}.png")

    return (rec_miou, mae(restored, gt), ssim(restored, gt), psnr(restored, gt),
            pixel_embedding(restored, cfg.embed_side),
            pixel_embedding(gt, cfg.embed_side))


def _bucket_row(label: str, slot: dict) -> MetricsRow:
    n = len(slot["mae"])
    frechet = None
    if n >= 2:
        frechet = frechet_distance(fit_gaussian(np.stack(slot["emb_r"])),
                                   fit_gaussian(np.stack(slot["emb_g"])))
    elif n > 0:
        frechet = math.nan
    return MetricsRow(
        bucket=label, n=n,
        mae=float(np.mean(slot["mae"])) if n else None,
        ssim=float(np.mean(slot["ssim"])) if n else None,
        psnr=float(np.mean(slot["psnr"])) if n else None,
        frechet=frechet)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.6f}"


def report_to_csv(run: RunReport) -> str:
    """CSV with a '#'-prefixed provenance header block."""
    buf = io.StringIO()
    for key, value in run.provenance.items():
        if key == "miou_mean" and isinstance(value, float):
            value = _fmt(value)
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    dataset = run.provenance["dataset"]
    for row in run.report.rows:
        writer.writerow([dataset, row.bucket, row.n, _fmt(row.mae),
                         _fmt(row.ssim), _fmt(row.psnr), _fmt(row.frechet)])
    return buf.getvalue()


def parse_report_csv(text: str):
    """Read back a report CSV into (provenance, rows-as-dicts)."""
    provenance = {}
    data_lines = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            provenance[key] = value
        elif line.strip():
            data_lines.append(line)
    reader = csv.DictReader(data_lines)
    rows = list(reader)
    return provenance, rows


def render_table(run: RunReport) -> str:
    """Human-readable table, one row per populated bucket plus Total."""
    header = f"{'bucket':<12}{'n':>8}{'MAE':>12}{'SSIM':>10}{'PSNR':>10}  {'Frechet (pixel)':>16}"
    lines = [header, "-" * len(header)]
    for row in run.report.rows:
        lines.append(f"{row.bucket:<12}{row.n:>8}{_fmt(row.mae):>12}"
                     f"{_fmt(row.ssim):>10}{_fmt(row.psnr):>10}  {_fmt(row.frechet):>16}")
    lines.append("-" * len(header))
    lines.append(f"segmentation MIoU mean: {_fmt(float(run.provenance['miou_mean']))}")
    lines.append(f"failed samples: {run.provenance.get('failed', 0)}")
    return "\n".join(lines)
