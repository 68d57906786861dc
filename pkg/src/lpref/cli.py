"""Operator command line: run the referee, score recorded runs, dedup, rank.

Exit codes: 0 success, 1 validation failure, 2 I/O failure. Set LPREF_LOG to
debug/info/warning/error to control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import threading
from pathlib import Path

from . import __version__
from .client import ContestantError, simulate_contestant
from .datasets import find_duplicates, load_ground_truth, load_thumbnail_dir
from .leaderboard import (
    DEFAULT_TIE_EPSILON,
    RunStore,
    format_csv,
    format_table,
    rank,
)
from .energy import load_power_trace
from .referee import (
    RefereeConfig,
    RefereeError,
    RefereeService,
    finalize_session,
    load_session_record,
)
from .track1 import (
    dedup_submissions,
    evaluate_track1,
    load_submission_records,
    load_track1_run,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

logger = logging.getLogger(__name__)


def _configure_logging() -> None:
    level_name = os.environ.get("LPREF_LOG", "warning").strip().upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


# ---------------------------------------------------------------------------
# subcommand implementations

def _cmd_serve(args) -> int:
    config = RefereeConfig.load(args.config)
    service = RefereeService(config)
    host, port = service.start()
    print(f"referee ready on {host}:{port} serving {len(service.catalog)} images", flush=True)

    stop = threading.Event()

    def _signal_handler(signum, frame):
        logger.info("received signal %d; shutting down", signum)
        stop.set()

    signal.signal(signal.SIGTERM, _signal_handler)
    signal.signal(signal.SIGINT, _signal_handler)
    while not stop.is_set():
        stop.wait(0.5)
    service.shutdown()
    print("referee stopped; sessions persisted", flush=True)
    return EXIT_OK


def _cmd_score_session(args) -> int:
    gts = load_ground_truth(args.gt, args.labels)
    record = load_session_record(args.session, label_space=set(gts.label_space))
    trace = load_power_trace(args.trace)
    report = finalize_session(record, gts, trace, track=args.track)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    if args.store:
        run_id = RunStore(args.store).persist_run(report)
        logger.info("persisted as %s", run_id)
    if args.out == "csv":
        print(f"team_id,{report['team_id']}")
        print(f"map,{report['map']!r}")
        print(f"energy_wh,{report['energy_wh']!r}")
        print(f"score,{report['score']!r}")
        print(f"images_served,{report['images_served']}")
        print(f"images_answered,{report['images_answered']}")
        print(f"window_end_ms,{report['window_end_ms']!r}")
        print("category_id,ap,num_gt,num_tp,num_fp")
        for row in report["per_class"]:
            print(
                f"{row['category_id']},{row['ap']!r},{row['num_gt']},"
                f"{row['num_tp']},{row['num_fp']}"
            )
    else:
        print(f"team: {report['team_id']}  state: {report['state']}")
        print(
            f"window: [0, {report['window_end_ms']:.0f}] ms"
            f"  served {report['images_served']}/{report['n_images']}"
            f"  answered {report['images_answered']}"
        )
        print(f"mAP: {report['map']:.4f}")
        print(f"energy: {report['energy_wh']:.4f} Wh")
        print(f"score: {report['score']:.4f}")
        print("per-class AP:")
        print("  category  ap      gt  tp  fp")
        for row in report["per_class"]:
            print(
                f"  {row['category_id']:<8d}  {row['ap']:.4f}  "
                f"{row['num_gt']:<3d} {row['num_tp']:<3d} {row['num_fp']:<3d}"
            )
    return EXIT_OK


def _cmd_score_track1(args) -> int:
    run = load_track1_run(args.run)
    scores = evaluate_track1(run)
    if args.store:
        latencies = [r.latency_ms for r in run.records]
        report = {
            "team_id": args.team,
            "track": "track1",
            "score": scores.test_metric,
            "components": {
                "test_metric": scores.test_metric,
                "latency_ms": sum(latencies) / len(latencies),
            },
            "test_metric": scores.test_metric,
            "accuracy_on_classified": scores.accuracy_on_classified,
            "num_classified": scores.num_classified,
            "accuracy_over_time": scores.accuracy_over_time,
            "n_total": run.n_total,
            "budget_per_image_ms": run.budget_per_image_ms,
        }
        run_id = RunStore(args.store).persist_run(report)
        logger.info("persisted as %s", run_id)
    if args.out == "csv":
        print(f"test_metric,{scores.test_metric!r}")
        print(f"accuracy_on_classified,{scores.accuracy_on_classified!r}")
        print(f"accuracy_over_time,{scores.accuracy_over_time!r}")
        print(f"num_classified,{scores.num_classified}")
    else:
        print(f"test metric             {scores.test_metric:.5f}")
        print(f"accuracy on classified  {scores.accuracy_on_classified:.5f}")
        print(f"accuracy / time         {scores.accuracy_over_time:.2e}")
        print(f"# classified            {scores.num_classified}")
    return EXIT_OK


def _cmd_dedup_images(args) -> int:
    candidates = load_thumbnail_dir(args.candidates)
    reference = load_thumbnail_dir(args.reference)
    pairs = find_duplicates(candidates, reference, args.threshold)
    lines = [
        "# thumbnail dedup: 30x30 grayscale box filter, L2 distance, "
        f"threshold={args.threshold!r}",
        "candidate_id,reference_id,distance",
    ]
    lines += [f"{c},{r},{d!r}" for c, r, d in pairs]
    text = "\n".join(lines) + "\n"
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    print(f"{len(pairs)} duplicate pair(s) within threshold")
    return EXIT_OK


def _cmd_dedup_submissions(args) -> int:
    records = load_submission_records(args.ledger)
    unique = dedup_submissions(records)
    print(f"{len(records)} submissions, {len(unique)} unique")
    if args.out == "csv":
        print("content_digest,test_metric,submitter,received_at_ms")
        for r in unique:
            print(f"{r.content_digest},{r.test_metric!r},{r.submitter},{r.received_at_ms!r}")
    else:
        print("digest            metric   submitter")
        for r in unique:
            print(f"{r.content_digest[:16]}  {r.test_metric:.4f}   {r.submitter}")
    return EXIT_OK


def _cmd_leaderboard(args) -> int:
    store = RunStore(args.store)
    entries = store.list_runs(track=args.track)
    ranked = rank(entries, tie_epsilon=args.epsilon)
    print(format_csv(ranked) if args.out == "csv" else format_table(ranked))
    return EXIT_OK


def _cmd_simulate_contestant(args) -> int:
    summary = simulate_contestant(
        args.server,
        args.answers,
        pace_ms=args.pace_ms,
        team_id=args.team,
        credential=args.credential,
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpref",
        description="Referee and scoring toolkit for timed low-power image recognition contests",
    )
    parser.add_argument("--version", action="version", version=f"lpref {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the referee until signaled")
    p.add_argument("--config", required=True, help="JSON config path")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("score-session", help="score a persisted session directory")
    p.add_argument("--session", required=True, help="session directory (session.json + answers.txt)")
    p.add_argument("--gt", required=True, help="ground-truth file")
    p.add_argument("--labels", default=None, help="label-space sidecar (default: <gt>.labels)")
    p.add_argument("--trace", required=True, help="power trace file")
    p.add_argument("--track", default="track2", help="track recorded in the report")
    p.add_argument("--report", default=None, help="also write the full report JSON here")
    p.add_argument("--store", default=None, help="also append the report to this run store")
    p.add_argument("--out", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_score_session)

    p = sub.add_parser("score-track1", help="score a recorded latency run")
    p.add_argument("--run", required=True, help="run file (n_total/budget header + records)")
    p.add_argument("--store", default=None, help="also append the scores to this run store")
    p.add_argument("--team", default="team", help="team id used when persisting")
    p.add_argument("--out", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_score_track1)

    p = sub.add_parser("dedup-images", help="report near-duplicate thumbnails across two sets")
    p.add_argument("--candidates", required=True, help="directory of candidate PGM/PPM images")
    p.add_argument("--reference", required=True, help="directory of reference PGM/PPM images")
    p.add_argument("--threshold", required=True, type=float, help="L2 distance threshold (no default)")
    p.add_argument("--report", default=None, help="also write the report here")
    p.set_defaults(func=_cmd_dedup_images)

    p = sub.add_parser("dedup-submissions", help="collapse a submission ledger by content digest")
    p.add_argument("--ledger", required=True, help="submission ledger CSV")
    p.add_argument("--out", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_dedup_submissions)

    p = sub.add_parser("leaderboard", help="rank stored runs with prize grouping")
    p.add_argument("--store", required=True, help="run store directory")
    p.add_argument("--track", default=None, help="filter to one track")
    p.add_argument("--epsilon", type=float, default=DEFAULT_TIE_EPSILON,
                   help="near-tie prize-group threshold")
    p.add_argument("--out", choices=("table", "csv"), default="table")
    p.set_defaults(func=_cmd_leaderboard)

    p = sub.add_parser("simulate-contestant", help="replay canned answers against a referee")
    p.add_argument("--server", required=True, help="referee base URL, e.g. http://127.0.0.1:8321")
    p.add_argument("--answers", required=True, help="answers file (detection lines)")
    p.add_argument("--pace-ms", type=float, default=0.0, help="delay between posts")
    p.add_argument("--team", default="team")
    p.add_argument("--credential", default="secret")
    p.set_defaults(func=_cmd_simulate_contestant)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"lpref: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, RefereeError, ContestantError) as exc:
        print(f"lpref: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
