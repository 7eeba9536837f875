import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descaffold.metrics import (SSIM_C1, SSIM_C2, fit_gaussian,
                                frechet_distance, gaussian_window, mae, miou,
                                pixel_embedding, psnr, ssim)
from descaffold.raster import BinaryMask, Raster


def gray(arr):
    return Raster(np.asarray(arr, dtype=np.float64)[:, :, None], "Gray")


def miou_counting_oracle(pred: np.ndarray, gt: np.ndarray) -> float:
    """Per-pixel counting loop, independent of the vectorized path."""
    inter = {True: 0, False: 0}
    union = {True: 0, False: 0}
    for y in range(pred.shape[0]):
        for x in range(pred.shape[1]):
            for cls in (True, False):
                p = pred[y, x] == cls
                g = gt[y, x] == cls
                if p and g:
                    inter[cls] += 1
                if p or g:
                    union[cls] += 1
    total = 0.0
    for cls in (True, False):
        total += 1.0 if union[cls] == 0 else inter[cls] / union[cls]
    return total / 2.0


class TestMiou:
    def test_identical_masks(self):
        rng = np.random.default_rng(0)
        bits = rng.random((6, 6)) < 0.4
        m = BinaryMask(bits)
        assert miou(m, m) == 1.0

    def test_two_by_two_prediction_all_background(self):
        gt = BinaryMask(np.array([[True, True], [False, False]]))
        pred = BinaryMask(np.zeros((2, 2), dtype=bool))
        assert miou(pred, gt) == 0.25

    def test_two_by_two_complement(self):
        gt = BinaryMask(np.array([[True, True], [False, False]]))
        pred = BinaryMask(~gt.bits)
        assert miou(pred, gt) == 0.0

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        a = BinaryMask(rng.random((5, 5)) < 0.5)
        b = BinaryMask(rng.random((5, 5)) < 0.5)
        assert miou(a, b) == miou(b, a)

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = rng.random((8, 8)) < rng.uniform(0, 1)
            b = rng.random((8, 8)) < rng.uniform(0, 1)
            assert miou(BinaryMask(a), BinaryMask(b)) == miou_counting_oracle(a, b)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            miou(BinaryMask(np.zeros((2, 2), dtype=bool)),
                 BinaryMask(np.zeros((3, 3), dtype=bool)))


class TestMae:
    def test_identity(self):
        img = gray(np.random.default_rng(0).random((4, 4)))
        assert mae(img, img) == 0.0

    def test_constant_offset(self):
        a = gray(np.full((4, 4), 0.2))
        b = gray(np.full((4, 4), 0.3))
        assert mae(a, b) == pytest.approx(0.1)


class TestPsnr:
    def test_identity_is_infinite(self):
        img = gray(np.random.default_rng(1).random((4, 4)))
        assert psnr(img, img) == math.inf

    def test_uniform_diff_point_one(self):
        a = gray(np.full((8, 8), 0.5))
        b = gray(np.full((8, 8), 0.6))
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)

    def test_uniform_diff_one(self):
        a = gray(np.zeros((8, 8)))
        b = gray(np.ones((8, 8)))
        assert psnr(a, b) == pytest.approx(0.0, abs=1e-9)


def ssim_windowed_oracle(x: np.ndarray, y: np.ndarray) -> float:
    """Direct per-window loops with explicit Gaussian weighting."""
    win1d = gaussian_window()
    w2d = np.outer(win1d, win1d)
    h, w = x.shape
    k = win1d.size
    vals = []
    for i in range(h - k + 1):
        for j in range(w - k + 1):
            px = x[i:i + k, j:j + k]
            py = y[i:i + k, j:j + k]
            mx = (w2d * px).sum()
            my = (w2d * py).sum()
            vx = (w2d * (px - mx) ** 2).sum()
            vy = (w2d * (py - my) ** 2).sum()
            cxy = (w2d * (px - mx) * (py - my)).sum()
            num = (2 * mx * my + SSIM_C1) * (2 * cxy + SSIM_C2)
            den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)
            vals.append(num / den)
    return float(np.mean(vals))


class TestSsim:
    def test_identity_is_one(self):
        img = gray(np.random.default_rng(2).random((16, 16)))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-9)

    def test_checkerboard_negative_against_inverse(self):
        yy, xx = np.mgrid[0:16, 0:16]
        board = ((yy + xx) % 2).astype(np.float64)
        a = gray(board)
        b = gray(1.0 - board)
        assert ssim(a, b) < 0.0

    def test_matches_windowed_oracle(self):
        rng = np.random.default_rng(3)
        x = rng.random((14, 15))
        y = np.clip(x + rng.normal(0, 0.1, x.shape), 0, 1)
        assert ssim(gray(x), gray(y)) == pytest.approx(
            ssim_windowed_oracle(x, y), abs=1e-7)

    def test_small_image_rejected(self):
        img = gray(np.zeros((8, 8)))
        with pytest.raises(ValueError):
            ssim(img, img)

    def test_constant_shift_invariance(self):
        # holds to first order when the two inputs differ by little
        rng = np.random.default_rng(4)
        x = 0.2 + 0.3 * rng.random((16, 16))
        y = np.clip(x + rng.uniform(-5e-4, 5e-4, x.shape), 0, 1)
        base = ssim(gray(x), gray(y))
        shifted = ssim(gray(x + 0.3), gray(y + 0.3))
        assert shifted == pytest.approx(base, abs=1e-6)

    def test_multichannel_averages(self):
        rng = np.random.default_rng(5)
        data = rng.random((16, 16, 3))
        img = Raster(data, "RGB")
        per_channel = [ssim(gray(data[:, :, c]), gray(data[:, :, c]))
                       for c in range(3)]
        assert ssim(img, img) == pytest.approx(np.mean(per_channel))


class TestFitGaussian:
    def test_identical_vectors_zero_cov(self):
        vecs = np.tile([1.0, 2.0], (5, 1))
        mean, cov = fit_gaussian(vecs)
        assert mean == pytest.approx([1.0, 2.0])
        assert np.all(cov == 0.0)

    def test_two_scalar_points(self):
        mean, cov = fit_gaussian(np.array([[0.0], [2.0]]))
        assert mean[0] == 1.0
        assert cov[0, 0] == 2.0  # unbiased: (1 + 1) / (2 - 1)

    def test_duplication_via_brute_force(self):
        rng = np.random.default_rng(6)
        vecs = rng.random((7, 3))
        doubled = np.concatenate([vecs, vecs])
        mean, cov = fit_gaussian(doubled)
        n = doubled.shape[0]
        centered = doubled - doubled.mean(axis=0)
        brute = np.zeros((3, 3))
        for row in centered:
            brute += np.outer(row, row)
        brute /= n - 1
        assert mean == pytest.approx(vecs.mean(axis=0))
        assert cov == pytest.approx(brute, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        _, cov = fit_gaussian(rng.random((10, 4)))
        assert np.abs(cov - cov.T).max() < 1e-12

    def test_single_vector_rejected(self):
        with pytest.raises(ValueError):
            fit_gaussian(np.array([[1.0, 2.0]]))


class TestFrechet:
    def test_identical_moments_zero(self):
        rng = np.random.default_rng(8)
        mean, cov = fit_gaussian(rng.random((12, 5)))
        assert frechet_distance((mean, cov), (mean, cov)) <= 1e-8

    def test_scalar_mean_shift(self):
        m1 = (np.array([0.0]), np.array([[1.0]]))
        m2 = (np.array([1.0]), np.array([[1.0]]))
        assert frechet_distance(m1, m2) == pytest.approx(1.0, abs=1e-10)

    def test_scalar_variance_gap(self):
        m1 = (np.array([0.0]), np.array([[1.0]]))
        m2 = (np.array([0.0]), np.array([[4.0]]))
        # (sigma1 - sigma2)^2 with sigma 1 and 2
        assert frechet_distance(m1, m2) == pytest.approx(1.0, abs=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_scalar_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        mu1, mu2 = rng.uniform(-3, 3, size=2)
        s1, s2 = rng.uniform(0.1, 2.0, size=2)
        got = frechet_distance((np.array([mu1]), np.array([[s1 * s1]])),
                               (np.array([mu2]), np.array([[s2 * s2]])))
        want = (mu1 - mu2) ** 2 + s1 * s1 + s2 * s2 - 2 * s1 * s2
        assert got == pytest.approx(want, abs=1e-10)

    def test_symmetric_in_arguments(self):
        rng = np.random.default_rng(9)
        m1 = fit_gaussian(rng.random((10, 4)))
        m2 = fit_gaussian(rng.random((10, 4)))
        assert frechet_distance(m1, m2) == frechet_distance(m2, m1)

    def test_dimension_mismatch(self):
        m1 = (np.zeros(2), np.eye(2))
        m2 = (np.zeros(3), np.eye(3))
        with pytest.raises(ValueError):
            frechet_distance(m1, m2)

    def test_asymmetric_cov_rejected(self):
        bad = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError):
            frechet_distance((np.zeros(2), bad), (np.zeros(2), np.eye(2)))


class TestPixelEmbedding:
    def test_constant_image(self):
        img = Raster(np.full((8, 8, 3), 0.5), "RGB")
        assert pixel_embedding(img, 2) == pytest.approx([0.5] * 4)

    def test_identical_images_identical_vectors(self):
        rng = np.random.default_rng(10)
        img = Raster(rng.random((9, 9, 3)), "RGB")
        assert np.array_equal(pixel_embedding(img, 4), pixel_embedding(img, 4))

    def test_side_one_on_plane_equals_mean(self):
        yy, xx = np.mgrid[0:9, 0:9].astype(np.float64) / 16.0
        plane = gray(0.1 + 0.3 * xx + 0.2 * yy)
        vec = pixel_embedding(plane, 1)
        assert vec[0] == pytest.approx(plane.data.mean(), abs=1e-12)

    def test_dimension(self):
        img = Raster(np.full((8, 8, 3), 0.5), "RGB")
        assert pixel_embedding(img, 5).shape == (25,)
