"""Ground-truth and answer-file ingestion plus the thumbnail duplicate filter.

File formats:
  ground truth   one object per line: `<image_id> <category_id> <xmin> <ymin> <xmax> <ymax>`
  label space    sidecar, one `<category_id> <name>` per line
  answers        one detection per line:
                 `<image_id> <category_id> <confidence> <xmin> <ymin> <xmax> <ymax>`
  images         PGM/PPM (P2/P5/P3/P6), maxval <= 255

Loading is all-or-nothing: any bad line fails with a located diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Optional, Sequence

import numpy as np

from . import _kernels
from .scoring import BoundingBox, Detection, GroundTruthObject

THUMBNAIL_SIZE = 30


class DatasetError(ValueError):
    """A dataset file failed validation; the message carries path:line context."""


@dataclass
class GroundTruthSet:
    """Validated annotations plus the label space and known image ids."""

    objects: tuple[GroundTruthObject, ...]
    label_space: dict[int, str]
    image_index: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        self.objects = tuple(self.objects)
        self.image_index = frozenset(self.image_index) | {o.image_id for o in self.objects}
        for obj in self.objects:
            if obj.category_id not in self.label_space:
                raise DatasetError(
                    f"ground-truth category {obj.category_id} outside the "
                    f"{len(self.label_space)}-category label space"
                )


def load_label_space(path) -> dict[int, str]:
    """Parse the `<category_id> <name>` sidecar."""
    path = Path(path)
    labels: dict[int, str] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(maxsplit=1)
            if len(parts) != 2:
                raise DatasetError(f"{path}:{lineno}: expected '<category_id> <name>', got {line!r}")
            try:
                cat = int(parts[0])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: category id {parts[0]!r} is not an integer") from None
            if cat < 1:
                raise DatasetError(f"{path}:{lineno}: category id must be >= 1, got {cat}")
            if cat in labels:
                raise DatasetError(f"{path}:{lineno}: duplicate category id {cat}")
            labels[cat] = parts[1]
    if not labels:
        raise DatasetError(f"{path}: label space is empty")
    return labels


def _parse_box(fields: Sequence[str], problems: list[str]) -> Optional[BoundingBox]:
    names = ("xmin", "ymin", "xmax", "ymax")
    values = []
    for name, text in zip(names, fields):
        try:
            value = float(text)
        except ValueError:
            problems.append(f"{name} {text!r} is not a number")
            continue
        if not math.isfinite(value):
            problems.append(f"{name} must be finite, got {text!r}")
            continue
        values.append(value)
    if len(values) != 4:
        return None
    xmin, ymin, xmax, ymax = values
    if xmin >= xmax:
        problems.append(f"xmin must be < xmax (got {xmin} >= {xmax})")
    if ymin >= ymax:
        problems.append(f"ymin must be < ymax (got {ymin} >= {ymax})")
    if xmin >= xmax or ymin >= ymax:
        return None
    return BoundingBox(xmin, ymin, xmax, ymax)


def load_ground_truth(path, labels_path=None) -> GroundTruthSet:
    """Load and fully validate a ground-truth file.

    The label space comes from ``labels_path`` when given, otherwise from the
    `.labels` sidecar next to ``path``.
    """
    path = Path(path)
    if labels_path is None:
        labels_path = path.with_suffix(".labels")
    labels = load_label_space(labels_path)
    objects: list[GroundTruthObject] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 6:
                raise DatasetError(
                    f"{path}:{lineno}: expected "
                    f"'<image_id> <category_id> <xmin> <ymin> <xmax> <ymax>', got {line!r}"
                )
            problems: list[str] = []
            try:
                cat = int(parts[1])
            except ValueError:
                raise DatasetError(
                    f"{path}:{lineno}: category id {parts[1]!r} is not an integer"
                ) from None
            if cat not in labels:
                raise DatasetError(
                    f"{path}:{lineno}: category {cat} outside the "
                    f"{len(labels)}-category label space"
                )
            box = _parse_box(parts[2:6], problems)
            if problems or box is None:
                raise DatasetError(f"{path}:{lineno}: " + "; ".join(problems))
            objects.append(GroundTruthObject(parts[0], cat, box))
    return GroundTruthSet(tuple(objects), labels)


def parse_detection_line(
    line: str,
    label_space: Optional[Collection[int]] = None,
    image_ids: Optional[Collection[str]] = None,
) -> Detection:
    """Parse one answer line, collecting every offending field before raising."""
    parts = line.split()
    if len(parts) != 7:
        raise ValueError(
            "expected '<image_id> <category_id> <confidence> <xmin> <ymin> <xmax> <ymax>', "
            f"got {line!r}"
        )
    problems: list[str] = []
    image_id = parts[0]
    if image_ids is not None and image_id not in image_ids:
        problems.append(f"image_id {image_id!r} is not in the catalog")
    cat: Optional[int] = None
    try:
        cat = int(parts[1])
        if cat < 1:
            problems.append(f"category_id must be >= 1, got {cat}")
            cat = None
        elif label_space is not None and cat not in label_space:
            problems.append(f"category_id {cat} outside the label space")
    except ValueError:
        problems.append(f"category_id {parts[1]!r} is not an integer")
    confidence: Optional[float] = None
    try:
        confidence = float(parts[2])
        if not (math.isfinite(confidence) and 0.0 <= confidence <= 1.0):
            problems.append(f"confidence must be in [0, 1], got {parts[2]}")
            confidence = None
    except ValueError:
        problems.append(f"confidence {parts[2]!r} is not a number")
    box = _parse_box(parts[3:7], problems)
    if problems or cat is None or confidence is None or box is None:
        raise ValueError("; ".join(problems) or f"unparseable detection line {line!r}")
    return Detection(image_id, cat, confidence, box)


def format_detection_line(d: Detection) -> str:
    return (
        f"{d.image_id} {d.category_id} {d.confidence!r} "
        f"{d.box.xmin!r} {d.box.ymin!r} {d.box.xmax!r} {d.box.ymax!r}"
    )


def parse_detection_lines(
    text: str,
    label_space: Optional[Collection[int]] = None,
    image_ids: Optional[Collection[str]] = None,
    source: str = "answers",
) -> list[Detection]:
    """Parse an answer body; raises one error naming every bad line and field."""
    detections: list[Detection] = []
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            detections.append(parse_detection_line(line, label_space, image_ids))
        except ValueError as exc:
            errors.append(f"{source}:{lineno}: {exc}")
    if errors:
        raise ValueError("; ".join(errors))
    return detections


def load_detections(
    path,
    label_space: Optional[Collection[int]] = None,
    image_ids: Optional[Collection[str]] = None,
) -> list[Detection]:
    path = Path(path)
    return parse_detection_lines(
        path.read_text(encoding="utf-8"), label_space, image_ids, source=str(path)
    )


# ---------------------------------------------------------------------------
# thumbnails

def read_pnm(data: bytes, source: str = "<bytes>") -> np.ndarray:
    """Decode PGM/PPM bytes to a uint8 array, (H, W) gray or (H, W, 3) color."""
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise DatasetError(f"{source}: unsupported image magic {magic!r} (PGM/PPM only)")
    ascii_format = magic in (b"P2", b"P3")
    color = magic in (b"P3", b"P6")

    # header tokens (width, height, maxval) with '#' comments allowed
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise DatasetError(f"{source}: truncated header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            try:
                tokens.append(int(data[pos:end]))
            except ValueError:
                raise DatasetError(f"{source}: bad header token {data[pos:end]!r}") from None
            pos = end
    width, height, maxval = tokens
    if width < 1 or height < 1:
        raise DatasetError(f"{source}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise DatasetError(f"{source}: maxval {maxval} unsupported (need 1..255)")
    count = width * height * (3 if color else 1)

    if ascii_format:
        values = data[pos:].split()
        if len(values) < count:
            raise DatasetError(f"{source}: expected {count} pixel values, found {len(values)}")
        try:
            flat = np.array([int(v) for v in values[:count]], dtype=np.int64)
        except ValueError as exc:
            raise DatasetError(f"{source}: non-integer pixel value: {exc}") from None
        if flat.min() < 0 or flat.max() > maxval:
            raise DatasetError(f"{source}: pixel value outside [0, {maxval}]")
        flat = flat.astype(np.uint8)
    else:
        pos += 1  # single whitespace byte after maxval
        raster = data[pos : pos + count]
        if len(raster) < count:
            raise DatasetError(f"{source}: expected {count} raster bytes, found {len(raster)}")
        flat = np.frombuffer(raster, dtype=np.uint8).copy()
    if color:
        return flat.reshape(height, width, 3)
    return flat.reshape(height, width)


def load_pnm(path) -> np.ndarray:
    path = Path(path)
    return read_pnm(path.read_bytes(), source=str(path))


def as_thumbnail(values) -> np.ndarray:
    """Validate and normalize to a (30, 30) uint8 grid."""
    arr = np.asarray(values)
    if arr.size != THUMBNAIL_SIZE * THUMBNAIL_SIZE:
        raise ValueError(
            f"thumbnail must hold {THUMBNAIL_SIZE * THUMBNAIL_SIZE} values, got {arr.size}"
        )
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"thumbnail values must be integers, got dtype {arr.dtype}")
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("thumbnail values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr.reshape(THUMBNAIL_SIZE, THUMBNAIL_SIZE)


def make_thumbnail(image: np.ndarray) -> np.ndarray:
    """Grayscale 30x30 reduction of a decoded image (integer luma + box filter)."""
    if image.ndim == 3:
        gray = _kernels.rgb_to_gray(np.ascontiguousarray(image))
    elif image.ndim == 2:
        gray = image
    else:
        raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {image.shape}")
    return _kernels.box_resize(np.ascontiguousarray(gray, dtype=np.uint8), THUMBNAIL_SIZE)


def load_thumbnail(path) -> np.ndarray:
    return make_thumbnail(load_pnm(path))


def thumbnail_distance(a, b) -> float:
    """L2 norm of the difference between two thumbnails."""
    da = as_thumbnail(a).astype(np.float64)
    db = as_thumbnail(b).astype(np.float64)
    diff = da - db
    return float(np.sqrt(np.sum(diff * diff)))


def find_duplicates(
    candidates: Sequence[tuple[str, np.ndarray]],
    reference: Sequence[tuple[str, np.ndarray]],
    threshold: float,
) -> list[tuple[str, str, float]]:
    """All (candidate, reference) pairs within the distance threshold.

    Returns (candidate_id, reference_id, distance) triples sorted by ascending
    distance (then ids, for deterministic reports).
    """
    if not (math.isfinite(threshold) and threshold > 0.0):
        raise ValueError(f"threshold must be > 0, got {threshold!r}")
    if not candidates or not reference:
        return []
    cand = np.stack([as_thumbnail(t).reshape(-1) for _, t in candidates]).astype(np.float64)
    ref = np.stack([as_thumbnail(t).reshape(-1) for _, t in reference]).astype(np.float64)
    distances = _kernels.pairwise_l2(cand, ref)
    hits = np.argwhere(distances <= threshold)
    report = [
        (candidates[i][0], reference[j][0], float(distances[i, j])) for i, j in hits
    ]
    report.sort(key=lambda item: (item[2], item[0], item[1]))
    return report


def load_thumbnail_dir(path) -> list[tuple[str, np.ndarray]]:
    """Thumbnails for every PGM/PPM file in a directory, id = file stem."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"thumbnail directory not found: {path}")
    out = []
    for entry in sorted(path.iterdir()):
        if entry.suffix.lower() in (".pgm", ".ppm") and entry.is_file():
            out.append((entry.stem, load_thumbnail(entry)))
    return out
