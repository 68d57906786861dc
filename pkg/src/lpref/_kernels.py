"""Numeric kernels behind scoring, energy integration, and thumbnail dedup.

Every kernel ships in two variants: a pure-numpy implementation
(``*_numpy``) and a loop form compiled with numba's ``@njit`` when numba is
importable. Set ``LPREF_NO_NUMBA=1`` to force the numpy path (useful for
debugging and as the benchmark baseline; ``benchmarks/bench_kernels.py``
times both). The module-level names without a suffix are the selected
variants; both paths compute the same values (bit-exact for the integer
thumbnail math, within float rounding elsewhere).
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    flag = os.environ.get("LPREF_NO_NUMBA", "").strip().lower()
    if flag in {"1", "true", "yes", "on"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()


# ---------------------------------------------------------------------------
# numpy variants

def iou_matrix_numpy(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Pairwise IoU of (m, 4) and (n, 4) xyxy boxes -> (m, n)."""
    ax0, ay0 = boxes_a[:, 0:1], boxes_a[:, 1:2]
    ax1, ay1 = boxes_a[:, 2:3], boxes_a[:, 3:4]
    bx0, by0, bx1, by1 = boxes_b[:, 0], boxes_b[:, 1], boxes_b[:, 2], boxes_b[:, 3]
    iw = np.minimum(ax1, bx1) - np.maximum(ax0, bx0)
    ih = np.minimum(ay1, by1) - np.maximum(ay0, by0)
    inter = np.where(iw > 0.0, iw, 0.0) * np.where(ih > 0.0, ih, 0.0)
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def greedy_match_numpy(
    det_boxes: np.ndarray,
    det_image: np.ndarray,
    gt_boxes: np.ndarray,
    gt_image: np.ndarray,
    threshold: float,
) -> np.ndarray:
    """Confidence-ranked greedy matching; returns a bool TP flag per detection.

    Detections must already be ordered by rank. A detection is TP iff the
    best-IoU still-unmatched ground truth in the same image reaches the
    threshold; that ground truth is then consumed.
    """
    m, n = det_boxes.shape[0], gt_boxes.shape[0]
    tp = np.zeros(m, dtype=np.bool_)
    if n == 0:
        return tp
    gt_used = np.zeros(n, dtype=np.bool_)
    for i in range(m):
        ious = iou_matrix_numpy(det_boxes[i : i + 1], gt_boxes)[0]
        ious[(gt_image != det_image[i]) | gt_used] = -1.0
        j = int(np.argmax(ious))
        if ious[j] >= threshold:
            tp[i] = True
            gt_used[j] = True
    return tp


def ap_from_flags_numpy(tp: np.ndarray, num_gt: int) -> float:
    """Area under the monotone-decreasing precision envelope.

    ``tp`` holds TP/FP flags in rank order; recall denominators use num_gt.
    """
    if tp.size == 0 or num_gt <= 0:
        return 0.0
    cum_tp = np.cumsum(tp.astype(np.float64))
    precision = cum_tp / np.arange(1, tp.size + 1, dtype=np.float64)
    recall = cum_tp / num_gt
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    return float(np.sum(np.diff(recall, prepend=0.0) * envelope))


def trapezoid_window_numpy(
    t: np.ndarray, w: np.ndarray, start: float, end: float
) -> float:
    """Trapezoid integral of w over [start, end] with interpolated boundaries.

    Caller guarantees t strictly increasing with t[0] <= start < end <= t[-1].
    Result carries the units of w * t (watt-milliseconds here).
    """
    w_start = np.interp(start, t, w)
    w_end = np.interp(end, t, w)
    inside = (t > start) & (t < end)
    tt = np.concatenate(([start], t[inside], [end]))
    ww = np.concatenate(([w_start], w[inside], [w_end]))
    return float(np.trapezoid(ww, tt))


def pairwise_l2_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix between rows of a (m, k) and b (n, k)."""
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    for i in range(a.shape[0]):
        d = b - a[i]
        out[i] = np.sqrt(np.einsum("nk,nk->n", d, d))
    return out


def rgb_to_gray_numpy(rgb: np.ndarray) -> np.ndarray:
    """Integer luma approximation of an (H, W, 3) uint8 image."""
    r = rgb[:, :, 0].astype(np.int64)
    g = rgb[:, :, 1].astype(np.int64)
    b = rgb[:, :, 2].astype(np.int64)
    return ((77 * r + 150 * g + 29 * b) >> 8).astype(np.uint8)


def box_resize_numpy(gray: np.ndarray, size: int) -> np.ndarray:
    """Box-filter downsample of a uint8 grid to (size, size), integer-exact.

    Cell boundaries at floor(k*dim/size); floor-divided means, so results are
    identical across platforms and across the numba/numpy paths.
    """
    h, w = gray.shape
    g = gray.astype(np.int64)
    ys = (np.arange(size + 1, dtype=np.int64) * h) // size
    xs = (np.arange(size + 1, dtype=np.int64) * w) // size
    out = np.empty((size, size), dtype=np.uint8)
    for i in range(size):
        y0 = min(int(ys[i]), h - 1)
        y1 = max(int(ys[i + 1]), y0 + 1)
        for j in range(size):
            x0 = min(int(xs[j]), w - 1)
            x1 = max(int(xs[j + 1]), x0 + 1)
            block = g[y0:y1, x0:x1]
            out[i, j] = int(block.sum()) // ((y1 - y0) * (x1 - x0))
    return out


# ---------------------------------------------------------------------------
# loop variants (compiled with @njit when numba is enabled)

def _iou_matrix_loop(boxes_a, boxes_b):
    m, n = boxes_a.shape[0], boxes_b.shape[0]
    out = np.empty((m, n), dtype=np.float64)
    for i in range(m):
        ax0, ay0, ax1, ay1 = boxes_a[i, 0], boxes_a[i, 1], boxes_a[i, 2], boxes_a[i, 3]
        area_a = (ax1 - ax0) * (ay1 - ay0)
        for j in range(n):
            bx0, by0, bx1, by1 = boxes_b[j, 0], boxes_b[j, 1], boxes_b[j, 2], boxes_b[j, 3]
            iw = min(ax1, bx1) - max(ax0, bx0)
            ih = min(ay1, by1) - max(ay0, by0)
            if iw > 0.0:
                iw_c = iw
            else:
                iw_c = 0.0
            if ih > 0.0:
                ih_c = ih
            else:
                ih_c = 0.0
            inter = iw_c * ih_c
            union = area_a + (bx1 - bx0) * (by1 - by0) - inter
            out[i, j] = inter / union
    return out


def _greedy_match_loop(det_boxes, det_image, gt_boxes, gt_image, threshold):
    m, n = det_boxes.shape[0], gt_boxes.shape[0]
    tp = np.zeros(m, dtype=np.bool_)
    gt_used = np.zeros(n, dtype=np.bool_)
    for i in range(m):
        ax0, ay0, ax1, ay1 = det_boxes[i, 0], det_boxes[i, 1], det_boxes[i, 2], det_boxes[i, 3]
        area_a = (ax1 - ax0) * (ay1 - ay0)
        best = -1
        best_iou = -1.0
        for j in range(n):
            if gt_used[j] or gt_image[j] != det_image[i]:
                continue
            bx0, by0, bx1, by1 = gt_boxes[j, 0], gt_boxes[j, 1], gt_boxes[j, 2], gt_boxes[j, 3]
            iw = min(ax1, bx1) - max(ax0, bx0)
            ih = min(ay1, by1) - max(ay0, by0)
            if iw > 0.0 and ih > 0.0:
                inter = iw * ih
            else:
                inter = 0.0
            union = area_a + (bx1 - bx0) * (by1 - by0) - inter
            iou = inter / union
            if iou > best_iou:
                best_iou = iou
                best = j
        if best >= 0 and best_iou >= threshold:
            tp[i] = True
            gt_used[best] = True
    return tp


def _ap_from_flags_loop(tp, num_gt):
    m = tp.size
    if m == 0 or num_gt <= 0:
        return 0.0
    precision = np.empty(m, dtype=np.float64)
    recall = np.empty(m, dtype=np.float64)
    c = 0
    for i in range(m):
        if tp[i]:
            c += 1
        precision[i] = c / (i + 1.0)
        recall[i] = c / num_gt
    best = 0.0
    for i in range(m - 1, -1, -1):
        if precision[i] > best:
            best = precision[i]
        precision[i] = best
    ap = 0.0
    prev_recall = 0.0
    for i in range(m):
        ap += (recall[i] - prev_recall) * precision[i]
        prev_recall = recall[i]
    return ap


def _trapezoid_window_loop(t, w, start, end):
    n = t.size
    i = 0
    while i < n and t[i] <= start:
        i += 1
    if i == 0:
        i = 1
    if t[i - 1] == start:
        w_prev = w[i - 1]
    else:
        frac = (start - t[i - 1]) / (t[i] - t[i - 1])
        w_prev = w[i - 1] + (w[i] - w[i - 1]) * frac
    total = 0.0
    t_prev = start
    while i < n and t[i] < end:
        total += (t[i] - t_prev) * (w[i] + w_prev) * 0.5
        t_prev = t[i]
        w_prev = w[i]
        i += 1
    if t[i] == end:
        w_end = w[i]
    else:
        frac = (end - t[i - 1]) / (t[i] - t[i - 1])
        w_end = w[i - 1] + (w[i] - w[i - 1]) * frac
    total += (end - t_prev) * (w_end + w_prev) * 0.5
    return total


def _pairwise_l2_loop(a, b):
    m, n, k = a.shape[0], b.shape[0], a.shape[1]
    out = np.empty((m, n), dtype=np.float64)
    for i in range(m):
        for j in range(n):
            s = 0.0
            for p in range(k):
                d = a[i, p] - b[j, p]
                s += d * d
            out[i, j] = np.sqrt(s)
    return out


def _rgb_to_gray_loop(rgb):
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty((h, w), dtype=np.uint8)
    for i in range(h):
        for j in range(w):
            r = np.int64(rgb[i, j, 0])
            g = np.int64(rgb[i, j, 1])
            b = np.int64(rgb[i, j, 2])
            out[i, j] = np.uint8((77 * r + 150 * g + 29 * b) >> 8)
    return out


def _box_resize_loop(gray, size):
    h, w = gray.shape
    out = np.empty((size, size), dtype=np.uint8)
    for i in range(size):
        y0 = (i * h) // size
        y1 = ((i + 1) * h) // size
        if y0 > h - 1:
            y0 = h - 1
        if y1 < y0 + 1:
            y1 = y0 + 1
        for j in range(size):
            x0 = (j * w) // size
            x1 = ((j + 1) * w) // size
            if x0 > w - 1:
                x0 = w - 1
            if x1 < x0 + 1:
                x1 = x0 + 1
            s = np.int64(0)
            for y in range(y0, y1):
                for x in range(x0, x1):
                    s += np.int64(gray[y, x])
            out[i, j] = np.uint8(s // ((y1 - y0) * (x1 - x0)))
    return out


# ---------------------------------------------------------------------------
# selection

if NUMBA_ENABLED:
    from numba import njit

    iou_matrix_jit = njit(cache=True)(_iou_matrix_loop)
    greedy_match_jit = njit(cache=True)(_greedy_match_loop)
    ap_from_flags_jit = njit(cache=True)(_ap_from_flags_loop)
    trapezoid_window_jit = njit(cache=True)(_trapezoid_window_loop)
    pairwise_l2_jit = njit(cache=True)(_pairwise_l2_loop)
    rgb_to_gray_jit = njit(cache=True)(_rgb_to_gray_loop)
    box_resize_jit = njit(cache=True)(_box_resize_loop)

    iou_matrix = iou_matrix_jit
    greedy_match = greedy_match_jit
    ap_from_flags = ap_from_flags_jit
    trapezoid_window = trapezoid_window_jit
    pairwise_l2 = pairwise_l2_jit
    rgb_to_gray = rgb_to_gray_jit
    box_resize = box_resize_jit
else:
    iou_matrix_jit = None
    greedy_match_jit = None
    ap_from_flags_jit = None
    trapezoid_window_jit = None
    pairwise_l2_jit = None
    rgb_to_gray_jit = None
    box_resize_jit = None

    iou_matrix = iou_matrix_numpy
    greedy_match = greedy_match_numpy
    ap_from_flags = ap_from_flags_numpy
    trapezoid_window = trapezoid_window_numpy
    pairwise_l2 = pairwise_l2_numpy
    rgb_to_gray = rgb_to_gray_numpy
    box_resize = box_resize_numpy


def warmup() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    boxes = np.array([[0.0, 0.0, 1.0, 1.0], [0.5, 0.5, 2.0, 2.0]])
    img = np.zeros(2, dtype=np.int64)
    iou_matrix(boxes, boxes)
    greedy_match(boxes, img, boxes, img, 0.5)
    ap_from_flags(np.array([True, False]), 2)
    trapezoid_window(np.array([0.0, 1.0, 2.0]), np.array([1.0, 1.0, 1.0]), 0.5, 1.5)
    pairwise_l2(np.zeros((2, 4)), np.ones((2, 4)))
    rgb_to_gray(np.zeros((2, 2, 3), dtype=np.uint8))
    box_resize(np.zeros((64, 64), dtype=np.uint8), 30)
