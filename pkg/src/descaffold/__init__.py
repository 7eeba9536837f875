"""descaffold: synthetic occlusion datasets, patch-attention inpainting,
and a restoration metric battery with bucketed reporting."""

from .crkernel import (CRConfig, PatchGrid, SimilarityMatrix, cr_inpaint,
                       cr_loss, extract_patches, reconstruct_patches,
                       similarity_matrix)
from .kernels import active_backend
from .metrics import (MetricsReport, MetricsRow, fit_gaussian,
                      frechet_distance, mae, miou, pixel_embedding, psnr, ssim)
from .pipeline import (EvalConfig, InpainterSpec, RunReport, SegmenterSpec,
                       evaluate_run, inpaint, render_table, report_to_csv,
                       segment)
from .raster import (BinaryMask, Raster, bilinear_resample, load_mask,
                     load_png, rotate, save_png, to_gray)
from .swin import (AttentionParams, BackboneConfig, StageShapes, WindowLayout,
                   adaptive_average_pool, backbone_shapes, cyclic_shift,
                   fuse_pyramid, pyramid_shapes, shifted_attention_mask,
                   window_merge, window_partition, windowed_attention)
from .synthesis import (DatasetManifest, ProportionBucket, SampleRecord,
                        SynthesisConfig, binarize, classify_bucket,
                        load_manifest, manifest_counts, overlay, save_manifest,
                        scaffold_proportion, subtract, synthesize_dataset,
                        synthesize_sample)

__version__ = "0.1.0"
