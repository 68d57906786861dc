"""Latency-budget classification metrics and the submission dedup ledger."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_BUDGET_MS = 30.0


@dataclass(frozen=True)
class Track1Record:
    """One processed image: id, measured latency, and whether it was correct."""

    image_id: str
    latency_ms: float
    correct: bool

    def __post_init__(self):
        if not (math.isfinite(self.latency_ms) and self.latency_ms > 0.0):
            raise ValueError(f"latency must be finite and positive, got {self.latency_ms!r}")


@dataclass(frozen=True)
class Track1Run:
    """A recorded run: per-image records in processing order over n_total images."""

    records: tuple[Track1Record, ...]
    n_total: int
    budget_per_image_ms: float = DEFAULT_BUDGET_MS

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.n_total < 0:
            raise ValueError(f"n_total must be >= 0, got {self.n_total}")
        if len(self.records) > self.n_total:
            raise ValueError(
                f"{len(self.records)} records exceed the declared {self.n_total} test images"
            )
        if not (math.isfinite(self.budget_per_image_ms) and self.budget_per_image_ms > 0.0):
            raise ValueError(f"budget must be positive, got {self.budget_per_image_ms!r}")


@dataclass(frozen=True)
class Track1Scores:
    """Wall-time budget metrics for one run."""

    test_metric: float
    accuracy_on_classified: float
    num_classified: int
    accuracy_over_time: float


def evaluate_track1(run: Track1Run) -> Track1Scores:
    """Score a run against its wall-time budget of budget_per_image_ms x n_total.

    Processing is sequential, so an image counts as classified iff the prefix
    sum of latencies up to and including it stays within the wall time.
    Images never attempted are unclassified and incorrect. The accuracy/time
    ratio divides by the wall time or the total inference time, whichever is
    longer.
    """
    if run.n_total == 0:
        raise ValueError("cannot score a run with n_total = 0")
    if not run.records:
        raise ValueError("cannot score a run with no processed images")
    latencies = np.array([r.latency_ms for r in run.records], dtype=np.float64)
    correct = np.array([r.correct for r in run.records], dtype=np.bool_)
    wall_time_ms = run.budget_per_image_ms * run.n_total
    classified = np.cumsum(latencies) <= wall_time_ms
    num_classified = int(np.count_nonzero(classified))
    num_correct = int(np.count_nonzero(classified & correct))
    # Both divisions are direct so the metrics stay exactly monotone in the
    # classified/correct counts.
    test_metric = num_correct / run.n_total
    accuracy_on_classified = num_correct / num_classified if num_classified else 0.0
    total_inference_ms = float(latencies.sum())
    accuracy_over_time = accuracy_on_classified / max(total_inference_ms, wall_time_ms)
    return Track1Scores(
        test_metric=test_metric,
        accuracy_on_classified=accuracy_on_classified,
        num_classified=num_classified,
        accuracy_over_time=accuracy_over_time,
    )


@dataclass(frozen=True)
class SubmissionRecord:
    """A submitted model file reduced to its content digest and score."""

    content_digest: str
    test_metric: float
    submitter: str
    received_at_ms: float


def content_digest(data: bytes) -> str:
    """Hex digest of the submitted bytes (md5 as an equality key, not security)."""
    return hashlib.md5(data).hexdigest()


def digest_file(path) -> str:
    return content_digest(Path(path).read_bytes())


def dedup_submissions(records: Sequence[SubmissionRecord]) -> list[SubmissionRecord]:
    """Collapse records sharing a content digest to one per digest.

    Within a digest group the best test metric wins; equal metrics keep the
    earliest-received record. Output preserves first-seen digest order.
    """
    best: dict[str, SubmissionRecord] = {}
    for record in records:
        kept = best.get(record.content_digest)
        if (
            kept is None
            or record.test_metric > kept.test_metric
            or (record.test_metric == kept.test_metric and record.received_at_ms < kept.received_at_ms)
        ):
            best[record.content_digest] = record
    return list(best.values())


def load_track1_run(path) -> Track1Run:
    """Parse a run file: header `n_total=<int> budget_ms=<real>`, then one
    `<image_id>,<latency_ms>,<0|1>` line per processed image."""
    path = Path(path)
    header = None
    records: list[Track1Record] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                fields = dict(part.split("=", 1) for part in line.split() if "=" in part)
                if "n_total" not in fields or "budget_ms" not in fields:
                    raise ValueError(
                        f"{path}:{lineno}: expected header 'n_total=<int> budget_ms=<real>', got {line!r}"
                    )
                try:
                    header = (int(fields["n_total"]), float(fields["budget_ms"]))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad header value: {exc}") from exc
                continue
            parts = line.split(",")
            if len(parts) != 3 or parts[2] not in ("0", "1"):
                raise ValueError(
                    f"{path}:{lineno}: expected '<image_id>,<latency_ms>,<0|1>', got {line!r}"
                )
            try:
                records.append(Track1Record(parts[0], float(parts[1]), parts[2] == "1"))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if header is None:
        raise ValueError(f"{path}: missing 'n_total=<int> budget_ms=<real>' header line")
    try:
        return Track1Run(tuple(records), n_total=header[0], budget_per_image_ms=header[1])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def load_submission_records(path) -> list[SubmissionRecord]:
    """Parse a submission ledger: `<digest>,<test_metric>,<submitter>,<received_at_ms>`."""
    path = Path(path)
    records: list[SubmissionRecord] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(
                    f"{path}:{lineno}: expected '<digest>,<test_metric>,<submitter>,<received_at_ms>', "
                    f"got {line!r}"
                )
            try:
                records.append(
                    SubmissionRecord(
                        content_digest=parts[0],
                        test_metric=float(parts[1]),
                        submitter=parts[2],
                        received_at_ms=float(parts[3]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return records
