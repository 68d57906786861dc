"""Detection scoring: IoU, per-class greedy matching, average precision, mAP.

All functions are pure and operate on immutable records, so callers may
evaluate different categories concurrently.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np

from . import _kernels

# A detection counts only if it overlaps an unmatched same-class ground truth
# by at least half, inclusive.
IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates; corners (xmin, ymin)/(xmax, ymax)."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        for name in ("xmin", "ymin", "xmax", "ymax"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"box {name} must be finite, got {value!r}")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                "degenerate box: requires xmin < xmax and ymin < ymax, got "
                f"({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})"
            )

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


@dataclass(frozen=True)
class Detection:
    """One submitted detection: image, category, confidence, box."""

    image_id: str
    category_id: int
    confidence: float
    box: BoundingBox

    def __post_init__(self):
        if not isinstance(self.category_id, int) or self.category_id < 1:
            raise ValueError(f"category_id must be a positive integer, got {self.category_id!r}")
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True)
class GroundTruthObject:
    """One annotated object: image, category, box."""

    image_id: str
    category_id: int
    box: BoundingBox

    def __post_init__(self):
        if not isinstance(self.category_id, int) or self.category_id < 1:
            raise ValueError(f"category_id must be a positive integer, got {self.category_id!r}")


@dataclass(frozen=True)
class ClassScore:
    """Per-category AP plus the match counts behind it."""

    category_id: int
    ap: float
    num_gt: int
    num_tp: int
    num_fp: int


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint, 1 when equal."""
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def _boxes_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    out = np.empty((len(boxes), 4), dtype=np.float64)
    for i, b in enumerate(boxes):
        out[i, 0] = b.xmin
        out[i, 1] = b.ymin
        out[i, 2] = b.xmax
        out[i, 3] = b.ymax
    return out


def match_class(
    detections: Sequence[Detection],
    gts: Sequence[GroundTruthObject],
    threshold: float = IOU_THRESHOLD,
) -> list[tuple[Detection, bool]]:
    """Greedy TP/FP assignment for one category.

    Detections are processed in descending confidence (ties keep submission
    order); each is a TP iff its best-IoU unmatched ground truth in the same
    image reaches the threshold, and that ground truth is consumed. Returns
    (detection, is_tp) pairs in processing order.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold!r}")
    categories = {d.category_id for d in detections} | {g.category_id for g in gts}
    if len(categories) > 1:
        raise ValueError(f"match_class expects a single category, got {sorted(categories)}")
    if not detections:
        return []
    order = sorted(range(len(detections)), key=lambda i: -detections[i].confidence)
    ranked = [detections[i] for i in order]
    if not gts:
        return [(d, False) for d in ranked]

    image_codes: dict[str, int] = {}
    for record in (*ranked, *gts):
        image_codes.setdefault(record.image_id, len(image_codes))
    det_img = np.array([image_codes[d.image_id] for d in ranked], dtype=np.int64)
    gt_img = np.array([image_codes[g.image_id] for g in gts], dtype=np.int64)
    tp = _kernels.greedy_match(
        _boxes_array([d.box for d in ranked]),
        det_img,
        _boxes_array([g.box for g in gts]),
        gt_img,
        float(threshold),
    )
    return [(d, bool(tp[i])) for i, d in enumerate(ranked)]


def average_precision(flags: Sequence[bool], num_gt: int) -> float:
    """AP as the area under the monotone-decreasing precision envelope.

    ``flags`` are TP/FP markers already in descending-confidence order;
    recall denominators use ``num_gt``. Returns 0 for an empty ranking or
    when there is nothing to recall.
    """
    if num_gt < 0:
        raise ValueError(f"num_gt must be >= 0, got {num_gt}")
    if num_gt == 0 or len(flags) == 0:
        return 0.0
    return float(_kernels.ap_from_flags(np.asarray(flags, dtype=np.bool_), num_gt))


def mean_average_precision(
    detections: Sequence[Detection],
    gts: Sequence[GroundTruthObject],
    label_space: Collection[int],
    threshold: float = IOU_THRESHOLD,
) -> tuple[float, list[ClassScore]]:
    """mAP over the label space plus the per-category breakdown.

    The mean runs over categories with ground truth; categories without any
    annotated object are excluded (their recall is undefined). Images with
    ground truth but no detections contribute misses through the recall
    denominator.
    """
    labels = set(label_space)
    for d in detections:
        if d.category_id not in labels:
            raise ValueError(f"detection category {d.category_id} outside the label space")
    for g in gts:
        if g.category_id not in labels:
            raise ValueError(f"ground-truth category {g.category_id} outside the label space")

    dets_by_cat: dict[int, list[Detection]] = defaultdict(list)
    gts_by_cat: dict[int, list[GroundTruthObject]] = defaultdict(list)
    for d in detections:
        dets_by_cat[d.category_id].append(d)
    for g in gts:
        gts_by_cat[g.category_id].append(g)

    per_class: list[ClassScore] = []
    ap_sum = 0.0
    scored = 0
    for cat in sorted(dets_by_cat.keys() | gts_by_cat.keys()):
        cat_dets = dets_by_cat.get(cat, [])
        cat_gts = gts_by_cat.get(cat, [])
        flags = [tp for _, tp in match_class(cat_dets, cat_gts, threshold)]
        num_tp = sum(flags)
        ap = average_precision(flags, len(cat_gts))
        per_class.append(
            ClassScore(
                category_id=cat,
                ap=ap,
                num_gt=len(cat_gts),
                num_tp=num_tp,
                num_fp=len(flags) - num_tp,
            )
        )
        if cat_gts:
            ap_sum += ap
            scored += 1
    map_value = ap_sum / scored if scored else 0.0
    return map_value, per_class
