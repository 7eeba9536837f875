"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time: numba is used when it imports
cleanly and the ``DESCAFFOLD_NUMBA`` environment variable is not set to a
falsey value ("0", "false", "off", "no"). Both backends share signatures
and agree to floating-point roundoff; ``benchmarks/bench_kernels.py``
times them side by side.
"""

from __future__ import annotations

import os

from . import numpy_impl

_FALSEY = {"0", "false", "off", "no"}


def _numba_wanted() -> bool:
    return os.environ.get("DESCAFFOLD_NUMBA", "1").strip().lower() not in _FALSEY


_impl = numpy_impl
_backend = "numpy"
if _numba_wanted():
    try:
        from . import numba_impl as _numba_impl

        _impl = _numba_impl
        _backend = "numba"
    except ImportError:  # numba missing or broken: stay on numpy
        pass


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _backend


resample_bilinear = _impl.resample_bilinear
rotate_bilinear = _impl.rotate_bilinear
alpha_composite = _impl.alpha_composite
ssim_stat_maps = _impl.ssim_stat_maps
softmax_rows = _impl.softmax_rows
diffusion_fill = _impl.diffusion_fill

# BLAS beats the naive loop version by ~10x at realistic patch counts
# (see benchmarks/bench_kernels.py), so the matmul-heavy kernel stays on
# numpy under either backend.
cosine_similarity_matrix = numpy_impl.cosine_similarity_matrix
