#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Imports both implementations directly (ignoring DESCAFFOLD_NUMBA) so the
two paths can be timed side by side. Numba functions are called once
before timing to exclude JIT compilation.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import math
import time

import numpy as np

from descaffold.kernels import numpy_impl

try:
    from descaffold.kernels import numba_impl
except ImportError:
    numba_impl = None


def make_cases(rng):
    img = rng.random((512, 512, 3))
    rgba = rng.random((512, 512, 4))
    mask = rng.random((256, 256)) < 0.25
    small = rng.random((256, 256, 3))
    init = small[~mask].mean(axis=0)
    win = np.exp(-np.linspace(-2, 2, 11) ** 2)
    win /= win.sum()
    x = rng.random((512, 512))
    y = rng.random((512, 512))
    vecs_a = rng.random((900, 192)) - 0.5
    vecs_b = rng.random((600, 192)) - 0.5
    sim = rng.uniform(-1, 1, (900, 600))
    theta = math.radians(33.0)
    return [
        ("resample 512->256", "resample_bilinear", (img, 256, 256)),
        ("rotate 512 rgb", "rotate_bilinear", (img, math.cos(theta), math.sin(theta), 0.0)),
        ("composite 512", "alpha_composite", (img, rgba)),
        ("ssim stats 512", "ssim_stat_maps", (x, y, win)),
        ("cosine 900x600x192", "cosine_similarity_matrix", (vecs_a, vecs_b, 1e-8)),
        ("softmax 900x600", "softmax_rows", (sim, 10.0)),
        ("diffusion 256, 300 it", "diffusion_fill", (small, mask, init, 300, 0.0)),
    ]


def time_call(fn, args, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = make_cases(rng)

    print(f"{'kernel':<24}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    print("-" * 58)
    for label, name, call_args in cases:
        np_time = time_call(getattr(numpy_impl, name), call_args, args.repeats)
        if numba_impl is None:
            print(f"{label:<24}{np_time * 1e3:>10.2f}ms{'n/a':>12}{'':>10}")
            continue
        nb_fn = getattr(numba_impl, name)
        nb_fn(*call_args)  # warm the JIT cache
        nb_time = time_call(nb_fn, call_args, args.repeats)
        print(f"{label:<24}{np_time * 1e3:>10.2f}ms{nb_time * 1e3:>10.2f}ms"
              f"{np_time / nb_time:>9.1f}x")


if __name__ == "__main__":
    main()
