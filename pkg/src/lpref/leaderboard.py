"""Run-report persistence, ranking, and near-tie prize grouping."""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence

DEFAULT_TIE_EPSILON = 0.001


class Track(str, Enum):
    TRACK1 = "track1"
    TRACK2 = "track2"
    TRACK3 = "track3"


@dataclass(frozen=True)
class LeaderboardEntry:
    team_id: str
    track: str
    score: float
    components: Mapping[str, float]
    run_id: str
    timestamp_ms: float


@dataclass(frozen=True)
class RankedEntry:
    prize_group: int
    entry: LeaderboardEntry


def recompute_score(entry: LeaderboardEntry) -> float:
    """Re-derive the score from the stored components."""
    comps = dict(entry.components)
    if "map" in comps and "energy_wh" in comps:
        return comps["map"] / comps["energy_wh"]
    if "test_metric" in comps:
        return comps["test_metric"]
    raise ValueError(f"run {entry.run_id}: components {sorted(comps)} cannot reproduce a score")


def rank(
    entries: Sequence[LeaderboardEntry],
    tie_epsilon: float = DEFAULT_TIE_EPSILON,
) -> list[RankedEntry]:
    """Order entries by descending score and assign prize groups.

    Only the best entry per (team, track) is ranked. Consecutive entries
    whose scores differ by at most ``tie_epsilon`` share a prize group (the
    rule is adjacency chaining, nothing more); groups are numbered densely
    from 1. Ties in score order deterministically by team id.
    """
    if not (math.isfinite(tie_epsilon) and tie_epsilon >= 0.0):
        raise ValueError(f"tie_epsilon must be >= 0, got {tie_epsilon!r}")
    best: dict[tuple[str, str], LeaderboardEntry] = {}
    for entry in entries:
        key = (entry.team_id, str(entry.track))
        kept = best.get(key)
        if (
            kept is None
            or entry.score > kept.score
            or (entry.score == kept.score and entry.timestamp_ms < kept.timestamp_ms)
        ):
            best[key] = entry
    ordered = sorted(best.values(), key=lambda e: (-e.score, e.team_id, str(e.track)))
    ranked: list[RankedEntry] = []
    group = 0
    prev_score: Optional[float] = None
    for entry in ordered:
        if prev_score is None or prev_score - entry.score > tie_epsilon:
            group += 1
        ranked.append(RankedEntry(prize_group=group, entry=entry))
        prev_score = entry.score
    return ranked


class RunStore:
    """Append-only report store: one JSON file per run plus a JSONL index.

    Reports are written byte-for-byte and re-read verbatim; a single writer
    appends while readers may snapshot concurrently.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index = self.root / "index.jsonl"
        self._lock = threading.Lock()

    def _index_entries(self) -> list[dict]:
        if not self._index.exists():
            return []
        entries = []
        with self._index.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    entries.append(json.loads(line))
        return entries

    def persist_run(self, report: Mapping) -> str:
        """Store a run report and index it; returns the assigned run id."""
        for key in ("team_id", "track", "score"):
            if key not in report:
                raise ValueError(f"run report is missing required field {key!r}")
        with self._lock:
            seq = len(self._index_entries()) + 1
            run_id = f"run-{seq:06d}"
            payload = json.dumps(dict(report), indent=2, sort_keys=True) + "\n"
            report_path = self.root / f"{run_id}.json"
            report_path.write_text(payload, encoding="utf-8")
            index_record = {
                "run_id": run_id,
                "team_id": report["team_id"],
                "track": str(report["track"]),
                "score": report["score"],
                "components": report.get("components", {}),
                "timestamp_ms": float(report.get("timestamp_ms", seq)),
            }
            with self._index.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(index_record, sort_keys=True) + "\n")
        return run_id

    def read_run_bytes(self, run_id: str) -> bytes:
        path = self.root / f"{run_id}.json"
        if not path.exists():
            raise FileNotFoundError(f"no stored run {run_id!r} under {self.root}")
        return path.read_bytes()

    def read_run(self, run_id: str) -> dict:
        return json.loads(self.read_run_bytes(run_id))

    def list_runs(
        self, team_id: Optional[str] = None, track: Optional[str] = None
    ) -> list[LeaderboardEntry]:
        entries = []
        for record in self._index_entries():
            if team_id is not None and record["team_id"] != team_id:
                continue
            if track is not None and record["track"] != str(track):
                continue
            entries.append(
                LeaderboardEntry(
                    team_id=record["team_id"],
                    track=record["track"],
                    score=float(record["score"]),
                    components=dict(record.get("components", {})),
                    run_id=record["run_id"],
                    timestamp_ms=float(record["timestamp_ms"]),
                )
            )
        return entries


def format_table(ranked: Sequence[RankedEntry]) -> str:
    """Aligned text table, scores at 4 significant digits."""
    rows = [("prize", "team", "track", "score", "components")]
    for item in ranked:
        e = item.entry
        comps = " ".join(f"{k}={v:.4g}" for k, v in sorted(e.components.items()))
        rows.append((str(item.prize_group), e.team_id, str(e.track), f"{e.score:.4f}", comps))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = []
    for row in rows:
        cells = [row[i].ljust(widths[i]) for i in range(4)]
        lines.append("  ".join(cells + [row[4]]).rstrip())
    return "\n".join(lines)


def format_csv(ranked: Sequence[RankedEntry]) -> str:
    """Machine CSV at full precision; components flattened to key=value."""
    lines = ["prize_group,team_id,track,score,run_id,components"]
    for item in ranked:
        e = item.entry
        comps = ";".join(f"{k}={v!r}" for k, v in sorted(e.components.items()))
        lines.append(f"{item.prize_group},{e.team_id},{e.track},{e.score!r},{e.run_id},{comps}")
    return "\n".join(lines)
