#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py [--repeats N]
The numpy column is what you get with LPREF_NO_NUMBA=1.
"""

import argparse
import time

import numpy as np

from lpref import _kernels


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(rng):
    boxes_a = np.sort(rng.uniform(0, 500, (2000, 4)), axis=1)[:, [0, 2, 1, 3]]
    boxes_b = np.sort(rng.uniform(0, 500, (2000, 4)), axis=1)[:, [0, 2, 1, 3]]
    det_img = rng.integers(0, 200, 20000).astype(np.int64)
    gt_img = rng.integers(0, 200, 20000).astype(np.int64)
    det_boxes = np.sort(rng.uniform(0, 500, (20000, 4)), axis=1)[:, [0, 2, 1, 3]]
    gt_boxes = np.sort(rng.uniform(0, 500, (20000, 4)), axis=1)[:, [0, 2, 1, 3]]
    flags = rng.random(200000) < 0.4
    t = np.cumsum(rng.uniform(0.5, 2.0, 600000))
    w = rng.uniform(5.0, 15.0, 600000)
    thumbs_a = rng.integers(0, 256, (400, 900)).astype(np.float64)
    thumbs_b = rng.integers(0, 256, (400, 900)).astype(np.float64)
    rgb = rng.integers(0, 256, (1080, 1920, 3)).astype(np.uint8)
    gray = rng.integers(0, 256, (1080, 1920)).astype(np.uint8)
    return [
        ("iou_matrix (2k x 2k)", "iou_matrix", (boxes_a, boxes_b)),
        ("greedy_match (20k dets, 20k gts)", "greedy_match",
         (det_boxes, det_img, gt_boxes, gt_img, 0.5)),
        ("ap_from_flags (200k flags)", "ap_from_flags", (flags, 80000)),
        ("trapezoid_window (600k samples)", "trapezoid_window",
         (t, w, float(t[100]), float(t[-100]))),
        ("pairwise_l2 (400 x 400 x 900)", "pairwise_l2", (thumbs_a, thumbs_b)),
        ("rgb_to_gray (1080p)", "rgb_to_gray", (rgb,)),
        ("box_resize (1080p -> 30x30)", "box_resize", (gray, 30)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    rows = []
    for label, name, call_args in workloads(rng):
        numpy_fn = getattr(_kernels, name + "_numpy")
        jit_fn = getattr(_kernels, name + "_jit")
        t_numpy = timeit(numpy_fn, *call_args, repeats=args.repeats)
        if jit_fn is None:
            rows.append((label, t_numpy, None))
            continue
        jit_fn(*call_args)  # compile outside the timed region
        t_jit = timeit(jit_fn, *call_args, repeats=args.repeats)
        rows.append((label, t_numpy, t_jit))

    print(f"numba enabled: {_kernels.NUMBA_ENABLED}")
    print(f"{'kernel':<36} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for label, t_numpy, t_jit in rows:
        if t_jit is None:
            print(f"{label:<36} {t_numpy * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
        else:
            print(
                f"{label:<36} {t_numpy * 1e3:>8.2f}ms {t_jit * 1e3:>8.2f}ms "
                f"{t_numpy / t_jit:>7.1f}x"
            )


if __name__ == "__main__":
    main()
