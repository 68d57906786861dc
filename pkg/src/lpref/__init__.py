"""Referee and scoring toolkit for timed low-power image recognition contests."""

__version__ = "0.1.0"

from .scoring import (
    BoundingBox,
    ClassScore,
    Detection,
    GroundTruthObject,
    average_precision,
    iou,
    match_class,
    mean_average_precision,
)
from .energy import (
    EnergyWindow,
    PowerSample,
    PowerTrace,
    compute_score,
    integrate_energy,
    load_power_trace,
)
from .track1 import (
    SubmissionRecord,
    Track1Record,
    Track1Run,
    Track1Scores,
    dedup_submissions,
    evaluate_track1,
)
from .datasets import (
    GroundTruthSet,
    find_duplicates,
    load_ground_truth,
    make_thumbnail,
    thumbnail_distance,
)
from .leaderboard import LeaderboardEntry, RankedEntry, RunStore, rank
from .referee import (
    ImageCatalog,
    Referee,
    RefereeConfig,
    RefereeService,
    Session,
    SessionState,
    finalize_session,
)

__all__ = [
    "BoundingBox",
    "ClassScore",
    "Detection",
    "EnergyWindow",
    "GroundTruthObject",
    "GroundTruthSet",
    "ImageCatalog",
    "LeaderboardEntry",
    "PowerSample",
    "PowerTrace",
    "RankedEntry",
    "Referee",
    "RefereeConfig",
    "RefereeService",
    "RunStore",
    "Session",
    "SessionState",
    "SubmissionRecord",
    "Track1Record",
    "Track1Run",
    "Track1Scores",
    "average_precision",
    "compute_score",
    "dedup_submissions",
    "evaluate_track1",
    "finalize_session",
    "find_duplicates",
    "integrate_energy",
    "iou",
    "load_ground_truth",
    "load_power_trace",
    "make_thumbnail",
    "match_class",
    "mean_average_precision",
    "rank",
    "thumbnail_distance",
]
