"""Cross-checks between the numba and numpy kernel backends, plus the
environment-flag dispatch."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from descaffold.kernels import active_backend, numpy_impl

try:
    from descaffold.kernels import numba_impl
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba_impl = None
    HAS_NUMBA = False

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")

RNG = np.random.default_rng(2024)


@needs_numba
class TestBackendAgreement:
    def test_resample(self):
        src = RNG.random((17, 23, 3))
        for oh, ow in ((17, 23), (9, 31), (1, 1), (40, 5)):
            a = numpy_impl.resample_bilinear(src, oh, ow)
            b = numba_impl.resample_bilinear(src, oh, ow)
            assert np.abs(a - b).max() < 1e-12

    def test_rotate(self):
        src = RNG.random((19, 17, 4))
        for angle in (0.0, 33.3, 90.0, 217.0):
            t = math.radians(angle)
            a = numpy_impl.rotate_bilinear(src, math.cos(t), math.sin(t), 0.0)
            b = numba_impl.rotate_bilinear(src, math.cos(t), math.sin(t), 0.0)
            assert np.abs(a - b).max() < 1e-12

    def test_alpha_composite(self):
        act = RNG.random((12, 12, 3))
        cut = RNG.random((12, 12, 4))
        a = numpy_impl.alpha_composite(act, cut)
        b = numba_impl.alpha_composite(act, cut)
        assert np.abs(a - b).max() < 1e-15

    def test_ssim_stats(self):
        x = RNG.random((20, 24))
        y = RNG.random((20, 24))
        win = np.exp(-np.linspace(-2, 2, 11) ** 2)
        win /= win.sum()
        for a, b in zip(numpy_impl.ssim_stat_maps(x, y, win),
                        numba_impl.ssim_stat_maps(x, y, win)):
            assert np.abs(a - b).max() < 1e-12

    def test_cosine_matrix(self):
        a_vecs = RNG.random((14, 48)) - 0.5
        b_vecs = RNG.random((9, 48)) - 0.5
        a = numpy_impl.cosine_similarity_matrix(a_vecs, b_vecs, 1e-8)
        b = numba_impl.cosine_similarity_matrix(a_vecs, b_vecs, 1e-8)
        assert np.abs(a - b).max() < 1e-12

    def test_softmax_rows(self):
        s = RNG.uniform(-1, 1, (10, 17))
        for alpha in (0.0, 1.0, 50.0):
            a = numpy_impl.softmax_rows(s, alpha)
            b = numba_impl.softmax_rows(s, alpha)
            assert np.abs(a - b).max() < 1e-12

    def test_diffusion_fill(self):
        img = RNG.random((16, 16, 3))
        mask = RNG.random((16, 16)) < 0.3
        init = img[~mask].mean(axis=0)
        a = numpy_impl.diffusion_fill(img, mask, init, 200, 1e-6)
        b = numba_impl.diffusion_fill(img, mask, init, 200, 1e-6)
        assert np.abs(a - b).max() < 1e-9


class TestNumpyImplProperties:
    def test_softmax_rows_sum_to_one(self):
        s = RNG.uniform(-5, 5, (8, 12))
        w = numpy_impl.softmax_rows(s, 7.0)
        assert np.abs(w.sum(axis=1) - 1.0).max() < 1e-9

    def test_cosine_bounds(self):
        a = RNG.random((6, 10)) - 0.5
        s = numpy_impl.cosine_similarity_matrix(a, a, 1e-8)
        assert s.max() <= 1.0 + 1e-9
        assert s.min() >= -1.0 - 1e-9

    def test_diffusion_leaves_known_pixels(self):
        img = RNG.random((10, 10, 2))
        mask = np.zeros((10, 10), dtype=bool)
        mask[4:6, 4:6] = True
        out = numpy_impl.diffusion_fill(img, mask, np.array([0.5, 0.5]), 50, 1e-8)
        assert np.array_equal(out[~mask], img[~mask])

    def test_diffusion_constant_image(self):
        img = np.full((10, 10, 1), 0.3)
        mask = np.zeros((10, 10), dtype=bool)
        mask[2:7, 2:7] = True
        out = numpy_impl.diffusion_fill(img, mask, np.array([0.3]), 300, 1e-9)
        assert np.abs(out - 0.3).max() < 1e-6


class TestDispatch:
    def test_default_backend_name(self):
        assert active_backend() in ("numba", "numpy")

    def test_env_flag_forces_numpy(self):
        env = dict(os.environ, DESCAFFOLD_NUMBA="0")
        code = ("from descaffold.kernels import active_backend;"
                "print(active_backend())")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "numpy"

    @needs_numba
    def test_numba_selected_by_default(self):
        env = {k: v for k, v in os.environ.items() if k != "DESCAFFOLD_NUMBA"}
        code = ("from descaffold.kernels import active_backend;"
                "print(active_backend())")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "numba"
