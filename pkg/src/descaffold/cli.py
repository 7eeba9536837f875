"""Command-line interface.

Subcommands: synth (dataset synthesis, with --manifest-only dry runs),
segment, inpaint (single-image real-world mode, no metrics), eval (full
batch evaluation), report (re-render a saved report), and inspect-swin
(shape and attention-mask dumps). Options can come from a flat key=value
config file; explicit flags override file values. Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .crkernel import CRConfig
from .pipeline import (EvalConfig, InpainterSpec, SegmenterSpec, evaluate_run,
                       inpaint, parse_report_csv, render_table, report_to_csv,
                       segment)
from .raster import BinaryMask, Raster, load_mask, load_png, save_png
from .swin import (BackboneConfig, backbone_shapes, pyramid_shapes,
                   shifted_attention_mask)
from .synthesis import (DEFAULT_SPLIT_NAMES, EXT_TEST_SPLIT, SynthesisConfig,
                        counts_table, save_manifest, synthesize_dataset)


def read_config_file(path) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment, blanks are skipped."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


class _Options:
    """Layered option lookup: CLI flag, then config file, then default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_values = read_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, name: str, default=None, cast=str):
        flag = getattr(self.args, name.replace("-", "_"), None)
        if flag is not None:
            return flag
        if name in self.file_values:
            return cast(self.file_values[name])
        return default


def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")


def _cmd_synth(args: argparse.Namespace) -> int:
    opt = _Options(args)
    scaffold_dir = opt.get("scaffold-dir")
    activity_dir = opt.get("activity-dir")
    if not scaffold_dir or not activity_dir:
        print("error: --scaffold-dir and --activity-dir are required", file=sys.stderr)
        return 2
    split = opt.get("split", "0.9,0.05,0.05")
    fractions = tuple(float(v) for v in str(split).split(","))
    cfg = SynthesisConfig(
        scaffold_dir=str(scaffold_dir),
        activity_dir=str(activity_dir),
        target_w=int(opt.get("target-w", 128, int)),
        target_h=int(opt.get("target-h", 128, int)),
        alpha_threshold=float(opt.get("alpha-threshold", 0.5, float)),
        rotation_range=(float(opt.get("rot-lo", 0.0, float)),
                        float(opt.get("rot-hi", 360.0, float))),
        seed=int(opt.get("seed", 0, int)),
        split_fractions=fractions,
        hole_fill=float(opt.get("hole-fill", 1.0, float)),
    )
    out_dir = opt.get("out")
    if out_dir is None and not args.manifest_only:
        print("error: --out is required unless --manifest-only", file=sys.stderr)
        return 2
    split_names = DEFAULT_SPLIT_NAMES
    if args.ext_test:
        split_names = (EXT_TEST_SPLIT, EXT_TEST_SPLIT, EXT_TEST_SPLIT)
    manifest = synthesize_dataset(cfg, manifest_only=args.manifest_only,
                                  out_dir=out_dir, split_names=split_names)
    manifest_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest_path = out / str(opt.get("manifest-name", "manifest.jsonl"))
        save_manifest(manifest, manifest_path)

    total = len(manifest.records)
    print(f"records: {total}")
    per_split: dict[str, int] = {}
    for rec in manifest.records:
        per_split[rec.split] = per_split.get(rec.split, 0) + 1
    for name in dict.fromkeys(split_names):
        print(f"split {name}: {per_split.get(name, 0)}")
    print(counts_table(manifest))
    if manifest_path is not None:
        print(f"manifest: {manifest_path}")
    return 0


def _segmenter_from(opt: _Options) -> SegmenterSpec:
    return SegmenterSpec(
        kind=str(opt.get("segmenter", "oracle")),
        mask_dir=opt.get("mask-dir"),
        threshold=float(opt.get("threshold", 0.5, float)),
        threshold_op=str(opt.get("threshold-op", "lt")),
    )


def _inpainter_from(opt: _Options) -> InpainterSpec:
    return InpainterSpec(
        kind=str(opt.get("inpainter", "cr-patch")),
        cr=CRConfig(alpha=float(opt.get("alpha", 10.0, float)),
                    patch=int(opt.get("patch", 8, int)),
                    stride=int(opt.get("stride", 4, int))),
        pyramid_levels=int(opt.get("levels", 3, int)),
        max_iters=int(opt.get("max-iters", 500, int)),
        epsilon=float(opt.get("eps", 1e-4, float)),
    )


def _cmd_eval(args: argparse.Namespace) -> int:
    opt = _Options(args)
    manifest = opt.get("manifest")
    if not manifest:
        print("error: --manifest is required", file=sys.stderr)
        return 2
    cfg = EvalConfig(
        embed_side=int(opt.get("embed-side", 8, int)),
        dataset_name=str(opt.get("dataset-name", Path(str(manifest)).stem)),
        seed=int(opt.get("seed", 0, int)),
        split=opt.get("split"),
        save_restored_dir=opt.get("save-restored"),
    )
    run = evaluate_run(manifest, _segmenter_from(opt), _inpainter_from(opt), cfg)
    print(render_table(run))
    out = opt.get("out")
    if out:
        Path(out).write_text(report_to_csv(run), encoding="utf-8")
        print(f"report: {out}")
    return 0


def _cmd_segment(args: argparse.Namespace) -> int:
    opt = _Options(args)
    image = load_png(args.input)
    spec = _segmenter_from(opt)
    context = {}
    if args.mask:
        context["mask_path"] = args.mask
    mask = segment(image, spec, context)
    save_png(mask, args.out)
    print(f"mask: {args.out} (coverage {mask.coverage:.4f})")
    return 0


def _cmd_inpaint(args: argparse.Namespace) -> int:
    opt = _Options(args)
    image = load_png(args.input)
    mask = load_mask(args.mask)
    spec = _inpainter_from(opt)
    restored = inpaint(image, mask, spec)
    save_png(restored, args.out)
    print(f"restored: {args.out}")
    if args.composite:
        save_png(_side_by_side(image, mask, restored), args.composite)
        print(f"composite: {args.composite}")
    return 0


def _side_by_side(image: Raster, mask: BinaryMask, restored: Raster) -> Raster:
    """input | mask | restored strip for eyeballing real-world results."""
    mask_rgb = np.repeat(mask.bits[:, :, None].astype(np.float64), 3, axis=2)
    img = image.data if image.channels == 3 else np.repeat(image.data[:, :, :1], 3, axis=2)
    res = restored.data if restored.channels == 3 else np.repeat(restored.data[:, :, :1], 3, axis=2)
    return Raster(np.concatenate([img, mask_rgb, res], axis=1), "RGB")


def _cmd_report(args: argparse.Namespace) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    provenance, rows = parse_report_csv(text)
    widths = (12, 8, 12, 10, 10, 18)
    header = ["bucket", "n", "mae", "ssim", "psnr", "frechet_pixel"]
    print("".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        cells = [row["bucket"], row["n"], row["mae"], row["ssim"],
                 row["psnr"], row["frechet_pixel"]]
        print("".join(str(c).ljust(w) for c, w in zip(cells, widths)))
    for key in ("dataset", "segmenter", "inpainter", "miou_mean", "failed"):
        if key in provenance:
            print(f"{key}: {provenance[key]}")
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
        print(f"csv: {args.csv}")
    return 0


def _cmd_inspect_swin(args: argparse.Namespace) -> int:
    blocks = tuple(int(v) for v in args.blocks.split(","))
    if len(blocks) != 4:
        print("error: --blocks needs four comma-separated integers", file=sys.stderr)
        return 2
    cfg = BackboneConfig(blocks_per_stage=blocks, base_dim=args.dim,
                         window=args.window)
    shapes = backbone_shapes(args.input_h, args.input_w, cfg)
    print(f"input: {args.input_h}x{args.input_w}, dim {args.dim}, "
          f"window {args.window}, blocks {list(blocks)}")
    for i, ((h, w, c), deg) in enumerate(zip(shapes.stages, shapes.degenerate), 1):
        note = "  [degenerate]" if deg else ""
        print(f"stage {i}: {h}x{w}x{c}{note}")
    pyr = pyramid_shapes(shapes, fused_dim=args.fused_dim)
    for i, (h, w, c) in enumerate(pyr.levels, 1):
        print(f"pyramid {i}: {h}x{w}x{c}")
    print(f"fused: {pyr.fused[0]}x{pyr.fused[1]}x{pyr.fused[2]}")
    print(f"ppm grids: {[g[0] for g in pyr.ppm_grids]}")
    for i, ((h, w, _), deg) in enumerate(zip(shapes.stages, shapes.degenerate), 1):
        if deg or h < args.window or w < args.window:
            continue
        masks = shifted_attention_mask(h, w, args.window)
        blocked = sum(int(np.isinf(m).sum()) for m in masks)
        print(f"stage {i} shifted windows: {len(masks)}, blocked pairs: {blocked}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="descaffold",
        description="Synthesize occlusion datasets, inpaint masked regions, "
                    "and score restorations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a labeled occlusion dataset")
    _add_config_flag(p)
    p.add_argument("--scaffold-dir")
    p.add_argument("--activity-dir")
    p.add_argument("--out")
    p.add_argument("--target-w", type=int)
    p.add_argument("--target-h", type=int)
    p.add_argument("--alpha-threshold", type=float)
    p.add_argument("--rot-lo", type=float)
    p.add_argument("--rot-hi", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", help="train,val,test fractions, e.g. 0.9,0.05,0.05")
    p.add_argument("--hole-fill", type=float)
    p.add_argument("--manifest-name")
    p.add_argument("--manifest-only", action="store_true",
                   help="compute records and proportions without writing images")
    p.add_argument("--ext-test", action="store_true",
                   help="label every record ext_test instead of train/val/test")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("segment", help="predict an occlusion mask for one image")
    _add_config_flag(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--segmenter")
    p.add_argument("--mask", help="external mask file (segmenter=external)")
    p.add_argument("--mask-dir")
    p.add_argument("--threshold", type=float)
    p.add_argument("--threshold-op", choices=("lt", "gt"))
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("inpaint", help="fill masked pixels of one image")
    _add_config_flag(p)
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--composite", help="also write an input|mask|restored strip")
    p.add_argument("--inpainter")
    p.add_argument("--alpha", type=float)
    p.add_argument("--patch", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=_cmd_inpaint)

    p = sub.add_parser("eval", help="evaluate a rendered dataset end to end")
    _add_config_flag(p)
    p.add_argument("--manifest")
    p.add_argument("--out", help="write the report CSV here")
    p.add_argument("--dataset-name")
    p.add_argument("--split")
    p.add_argument("--seed", type=int)
    p.add_argument("--embed-side", type=int)
    p.add_argument("--save-restored")
    p.add_argument("--segmenter")
    p.add_argument("--mask-dir")
    p.add_argument("--threshold", type=float)
    p.add_argument("--threshold-op", choices=("lt", "gt"))
    p.add_argument("--inpainter")
    p.add_argument("--alpha", type=float)
    p.add_argument("--patch", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="re-render a saved report CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--csv", help="copy the CSV to this path")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("inspect-swin", help="dump backbone shapes and window masks")
    p.add_argument("--input-h", type=int, default=512)
    p.add_argument("--input-w", type=int, default=512)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--blocks", default="2,2,18,2")
    p.add_argument("--fused-dim", type=int, default=512)
    p.set_defaults(func=_cmd_inspect_swin)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
