"""Shared test fixtures: independent oracles, clocks, and file builders.

The oracles here are deliberately plain-Python (no numpy, no package
internals) so they stay independent of the code paths they check.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path


class FakeClock:
    """Deterministic clock: returns `value` and advances by `step` per call."""

    def __init__(self, start=0.0, step=0.0):
        self.value = float(start)
        self.step = float(step)

    def __call__(self) -> float:
        now = self.value
        self.value += self.step
        return now

    def advance(self, ms: float) -> None:
        self.value += ms

    def set(self, ms: float) -> None:
        self.value = float(ms)


# ---------------------------------------------------------------------------
# brute-force detection-scoring oracle

def oracle_iou(a, b):
    """IoU of two (x0, y0, x1, y1) tuples; plain python floats."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def oracle_class_flags(dets, gts, threshold):
    """Greedy TP/FP flags for one category.

    dets: (image_id, confidence, box) in submission order; gts: (image_id, box).
    Ranked by descending confidence with submission order breaking ties; each
    detection takes the best-IoU unused ground truth in its image.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i][1], i))
    used = [False] * len(gts)
    flags = []
    for i in order:
        image_id, _, box = dets[i]
        best_j = -1
        best_v = -1.0
        for j, (gt_image, gt_box) in enumerate(gts):
            if used[j] or gt_image != image_id:
                continue
            v = oracle_iou(box, gt_box)
            if v > best_v:
                best_v = v
                best_j = j
        if best_j >= 0 and best_v >= threshold:
            flags.append(True)
            used[best_j] = True
        else:
            flags.append(False)
    return flags


def oracle_ap(flags, num_gt):
    """PR area computed directly: envelope from the right, then rectangles."""
    if num_gt == 0 or not flags:
        return 0.0
    points = []
    tp = 0
    for k, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        points.append((tp / num_gt, tp / k))
    envelope = []
    best = 0.0
    for recall, precision in reversed(points):
        best = max(best, precision)
        envelope.append((recall, best))
    envelope.reverse()
    ap = 0.0
    prev_recall = 0.0
    for recall, precision in envelope:
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def oracle_map(dets, gts, threshold=0.5):
    """mAP over categories with ground truth.

    dets: (image_id, category, confidence, box) in submission order;
    gts: (image_id, category, box).
    """
    categories = sorted({cat for _, cat, _ in gts})
    aps = []
    for cat in categories:
        cat_dets = [(img, conf, box) for img, c, conf, box in dets if c == cat]
        cat_gts = [(img, box) for img, c, box in gts if c == cat]
        flags = oracle_class_flags(cat_dets, cat_gts, threshold)
        aps.append(oracle_ap(flags, len(cat_gts)))
    return sum(aps) / len(aps) if aps else 0.0


# ---------------------------------------------------------------------------
# exact energy oracle

def exact_energy_wh(ts, ws, start, end):
    """Exact watt-hours for a piecewise-linear trace, in rational arithmetic.

    ts/ws must be exactly-representable values (ints or Fractions).
    """
    total = Fraction(0)
    start = Fraction(start)
    end = Fraction(end)
    for i in range(len(ts) - 1):
        t0, t1 = Fraction(ts[i]), Fraction(ts[i + 1])
        w0, w1 = Fraction(ws[i]), Fraction(ws[i + 1])
        lo, hi = max(t0, start), min(t1, end)
        if hi <= lo:
            continue

        def w_at(x):
            return w0 + (w1 - w0) * (x - t0) / (t1 - t0)

        total += (hi - lo) * (w_at(lo) + w_at(hi)) / 2
    return total / Fraction(3_600_000)


# ---------------------------------------------------------------------------
# image and file builders

def pgm_bytes(rows, maxval=255, ascii_format=False) -> bytes:
    """Encode a 2D list/array of ints as PGM (P5, or P2 when ascii_format)."""
    h = len(rows)
    w = len(rows[0])
    if ascii_format:
        body = "\n".join(" ".join(str(int(v)) for v in row) for row in rows)
        return f"P2\n{w} {h}\n{maxval}\n{body}\n".encode()
    raster = bytes(int(v) for row in rows for v in row)
    return f"P5\n{w} {h}\n{maxval}\n".encode() + raster


def ppm_bytes(rows, maxval=255, ascii_format=False) -> bytes:
    """Encode a 3D list/array (H x W x 3) as PPM (P6, or P3 when ascii_format)."""
    h = len(rows)
    w = len(rows[0])
    if ascii_format:
        body = "\n".join(
            " ".join(str(int(c)) for px in row for c in px) for row in rows
        )
        return f"P3\n{w} {h}\n{maxval}\n{body}\n".encode()
    raster = bytes(int(c) for row in rows for px in row for c in px)
    return f"P6\n{w} {h}\n{maxval}\n".encode() + raster


def flat_gray(value, size=8):
    return [[value] * size for _ in range(size)]


def write_catalog_dir(root: Path, n_images: int, size=8) -> Path:
    """n PGM images named img01.pgm.. with distinct constant gray levels."""
    root.mkdir(parents=True, exist_ok=True)
    for i in range(1, n_images + 1):
        (root / f"img{i:02d}.pgm").write_bytes(pgm_bytes(flat_gray(i % 256, size)))
    return root


def write_lines(path: Path, lines) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# the 20-image end-to-end fixture (hand-computed expectations)

# Ground truth: category 1 has 4 objects, category 2 has 2.
LOOPBACK_GT_LINES = [
    "img01 1 0 0 10 10",
    "img02 1 0 0 10 10",
    "img03 1 0 0 10 10",
    "img04 1 0 0 10 10",
    "img05 2 0 0 10 10",
    "img06 2 0 0 10 10",
]
LOOPBACK_LABEL_LINES = ["1 person", "2 car"]

# Answers: category 1 ranks TP (IoU 1.0), TP (IoU 0.5), FP -> AP 0.5 of 4 GT;
# category 2 ranks TP, FP (IoU 0.4) -> AP 0.5 of 2 GT. mAP = 0.5.
LOOPBACK_ANSWER_LINES = [
    "img01 1 0.9 0 0 10 10",
    "img02 1 0.8 0 0 5 10",
    "img03 1 0.7 20 20 30 30",
    "img05 2 0.6 0 0 10 10",
    "img06 2 0.5 0 0 4 10",
]
LOOPBACK_EXPECTED_MAP = 0.5
# A perfect late answer for the unanswered img04 would lift category 1's AP
# to 0.75, so any leak of the late post is visible in the report.
LOOPBACK_LATE_LINE = "img04 1 0.95 0 0 10 10"
LOOPBACK_TRACE_LINES = ["# constant 12 W", "0,12", "600000,12"]
