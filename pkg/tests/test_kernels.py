"""Parity between the selected kernels and the pure-numpy fallbacks."""

import os
import subprocess
import sys

import numpy as np
import pytest

from lpref import _kernels


def random_boxes(rng, n, span=50):
    x0 = rng.uniform(0, span, n)
    y0 = rng.uniform(0, span, n)
    w = rng.uniform(0.5, span / 2, n)
    h = rng.uniform(0.5, span / 2, n)
    return np.stack([x0, y0, x0 + w, y0 + h], axis=1)


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="numba path not active")
class TestJitNumpyParity:
    def test_iou_matrix(self):
        rng = np.random.default_rng(51)
        a, b = random_boxes(rng, 40), random_boxes(rng, 30)
        np.testing.assert_allclose(
            _kernels.iou_matrix_jit(a, b), _kernels.iou_matrix_numpy(a, b), rtol=1e-14
        )

    def test_greedy_match(self):
        rng = np.random.default_rng(52)
        for _ in range(30):
            m, n = int(rng.integers(1, 25)), int(rng.integers(1, 25))
            det = random_boxes(rng, m, span=12)
            gts = random_boxes(rng, n, span=12)
            det_img = rng.integers(0, 3, m).astype(np.int64)
            gt_img = rng.integers(0, 3, n).astype(np.int64)
            jit = _kernels.greedy_match_jit(det, det_img, gts, gt_img, 0.5)
            ref = _kernels.greedy_match_numpy(det, det_img, gts, gt_img, 0.5)
            assert jit.tolist() == ref.tolist()

    def test_ap_from_flags(self):
        rng = np.random.default_rng(53)
        for _ in range(50):
            flags = rng.random(int(rng.integers(1, 40))) < 0.5
            num_gt = int(rng.integers(1, 12))
            assert _kernels.ap_from_flags_jit(flags, num_gt) == pytest.approx(
                _kernels.ap_from_flags_numpy(flags, num_gt), rel=1e-12, abs=1e-15
            )

    def test_trapezoid_window(self):
        rng = np.random.default_rng(54)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            t = np.sort(rng.choice(np.arange(0, 10_000), size=n, replace=False)).astype(float)
            w = rng.uniform(0, 20, n)
            start = float(t[0] + (t[-1] - t[0]) * rng.uniform(0, 0.4))
            end = float(t[0] + (t[-1] - t[0]) * rng.uniform(0.6, 1.0))
            assert _kernels.trapezoid_window_jit(t, w, start, end) == pytest.approx(
                _kernels.trapezoid_window_numpy(t, w, start, end), rel=1e-12, abs=1e-12
            )

    def test_pairwise_l2_exact_on_integer_grids(self):
        # uint8-derived values: sums of squares stay below 2**53, so both
        # paths are exactly equal regardless of summation order
        rng = np.random.default_rng(55)
        a = rng.integers(0, 256, (12, 900)).astype(np.float64)
        b = rng.integers(0, 256, (9, 900)).astype(np.float64)
        assert np.array_equal(_kernels.pairwise_l2_jit(a, b), _kernels.pairwise_l2_numpy(a, b))

    def test_rgb_to_gray_exact(self):
        rng = np.random.default_rng(56)
        rgb = rng.integers(0, 256, (33, 47, 3), dtype=np.int64).astype(np.uint8)
        assert np.array_equal(_kernels.rgb_to_gray_jit(rgb), _kernels.rgb_to_gray_numpy(rgb))

    def test_box_resize_exact(self):
        rng = np.random.default_rng(57)
        for shape in ((30, 30), (31, 59), (60, 60), (231, 173), (800, 600)):
            gray = rng.integers(0, 256, shape, dtype=np.int64).astype(np.uint8)
            assert np.array_equal(
                _kernels.box_resize_jit(gray, 30), _kernels.box_resize_numpy(gray, 30)
            )


def test_env_flag_selects_numpy_path():
    env = dict(os.environ, LPREF_NO_NUMBA="1")
    code = (
        "from lpref import _kernels; "
        "assert not _kernels.NUMBA_ENABLED; "
        "assert _kernels.iou_matrix is _kernels.iou_matrix_numpy; "
        "assert _kernels.greedy_match_jit is None; "
        "print('numpy-path-ok')"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=120
    )
    assert out.returncode == 0, out.stderr
    assert "numpy-path-ok" in out.stdout


def test_selected_names_point_at_active_variant():
    if _kernels.NUMBA_ENABLED:
        assert _kernels.iou_matrix is _kernels.iou_matrix_jit
        assert _kernels.trapezoid_window is _kernels.trapezoid_window_jit
    else:
        assert _kernels.iou_matrix is _kernels.iou_matrix_numpy
        assert _kernels.trapezoid_window is _kernels.trapezoid_window_numpy
