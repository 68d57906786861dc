"""Timed HTTP referee: sessions, image serving, answer intake, run reports.

Wire protocol (HTTP/1.1):
  POST /v1/login      body ``team_id=<s>&credential=<s>`` ->
                      ``{"token": ..., "window_start_ms": 0, "n_images": N}``
  GET  /v1/image/<i>  ``Authorization: Bearer <token>`` -> image bytes
  POST /v1/result     bearer auth; one detection per line:
                      ``<image_id> <category_id> <confidence> <xmin> <ymin> <xmax> <ymax>``
  POST /v1/logout     bearer auth -> final window JSON

Server receipt time is authoritative for every window decision; the clock is
injectable so replays are deterministic. All timestamps persisted in session
records and run reports are milliseconds since the session epoch (0 = login),
never wall clock.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence
from urllib.parse import parse_qs, urlparse

from .datasets import (
    GroundTruthSet,
    format_detection_line,
    load_detections,
    load_ground_truth,
    parse_detection_lines,
)
from .energy import (
    DEFAULT_MAX_GAP_MS,
    EnergyWindow,
    PowerTrace,
    compute_score,
    integrate_energy,
    load_power_trace,
)
from .leaderboard import RunStore
from .scoring import Detection, mean_average_precision

logger = logging.getLogger(__name__)

WINDOW_LIMIT_MS = 600_000.0  # 10 minutes

CLOCK_NOTE = (
    "referee receipt clock is authoritative; the power trace is assumed "
    "pre-aligned to the session epoch (0 = login)"
)

_MEDIA_TYPES = {
    ".pgm": "image/x-portable-graymap",
    ".ppm": "image/x-portable-pixmap",
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
}


def system_clock_ms() -> float:
    return time.time() * 1000.0


class RefereeError(Exception):
    """Protocol-level failure; http_status maps it onto the wire."""

    http_status = 400


class AuthError(RefereeError):
    http_status = 401


class SessionConflictError(RefereeError):
    http_status = 409


class SessionOverError(RefereeError):
    http_status = 410


class UnknownSessionError(RefereeError):
    http_status = 401


class NotFoundError(RefereeError):
    http_status = 404


class BadRequestError(RefereeError):
    http_status = 400


class SessionState(Enum):
    CREATED = "created"
    ACTIVE = "active"
    CLOSED = "closed"
    EXPIRED = "expired"


@dataclass
class CatalogImage:
    index: int
    image_id: str
    payload: bytes
    media_type: str


class ImageCatalog:
    """The served test set: images addressed by a contiguous 1..N index."""

    def __init__(self, images: Sequence[CatalogImage]):
        self._images = list(images)
        ids = set()
        for pos, image in enumerate(self._images, start=1):
            if image.index != pos:
                raise ValueError(
                    f"catalog indices must be contiguous from 1; position {pos} has index {image.index}"
                )
            if image.image_id in ids:
                raise ValueError(f"duplicate image id {image.image_id!r} in catalog")
            ids.add(image.image_id)
        self._ids = frozenset(ids)

    @classmethod
    def from_dir(cls, path) -> "ImageCatalog":
        path = Path(path)
        if not path.is_dir():
            raise FileNotFoundError(f"image catalog directory not found: {path}")
        files = sorted(
            p for p in path.iterdir() if p.is_file() and not p.name.startswith(".")
        )
        if not files:
            raise ValueError(f"image catalog directory is empty: {path}")
        images = [
            CatalogImage(
                index=i,
                image_id=p.stem,
                payload=p.read_bytes(),
                media_type=_MEDIA_TYPES.get(p.suffix.lower(), "application/octet-stream"),
            )
            for i, p in enumerate(files, start=1)
        ]
        return cls(images)

    def __len__(self) -> int:
        return len(self._images)

    @property
    def ids(self) -> frozenset[str]:
        return self._ids

    def get(self, index: int) -> CatalogImage:
        if not 1 <= index <= len(self._images):
            raise NotFoundError(f"image index {index} out of range 1..{len(self._images)}")
        return self._images[index - 1]


@dataclass(frozen=True)
class SessionRecord:
    """Replayable snapshot of a finished session, epoch-relative."""

    team_id: str
    state: str  # "closed" or "expired"
    window_end_ms: float  # relative to login; window start is 0
    window_limit_ms: float
    n_images: int
    images_served: tuple[int, ...]
    answers: Mapping[str, tuple[Detection, ...]]


@dataclass
class Session:
    """One contestant run, mutated only under its own lock."""

    token: str
    team_id: str
    login_at_ms: float
    limit_ms: float
    n_images: int
    state: SessionState = SessionState.CREATED
    logout_at_ms: Optional[float] = None
    answers: dict = field(default_factory=dict)
    images_served: set = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def deadline_ms(self) -> float:
        return self.login_at_ms + self.limit_ms

    def window_end_relative_ms(self) -> float:
        if self.logout_at_ms is None:
            raise ValueError("session window is not final until logout or expiry")
        return self.logout_at_ms - self.login_at_ms

    def window(self) -> EnergyWindow:
        return EnergyWindow(0.0, self.window_end_relative_ms())

    def to_record(self) -> SessionRecord:
        return SessionRecord(
            team_id=self.team_id,
            state=self.state.value,
            window_end_ms=self.window_end_relative_ms(),
            window_limit_ms=self.limit_ms,
            n_images=self.n_images,
            images_served=tuple(sorted(self.images_served)),
            answers={k: tuple(v) for k, v in self.answers.items()},
        )


class Referee:
    """Session registry and protocol rules, independent of the HTTP layer."""

    def __init__(
        self,
        catalog: ImageCatalog,
        teams: Mapping[str, str],
        *,
        window_ms: float = WINDOW_LIMIT_MS,
        clock: Callable[[], float] = system_clock_ms,
        label_space: Optional[Iterable[int]] = None,
        on_session_end: Optional[Callable[[Session], None]] = None,
    ):
        if window_ms <= 0 or window_ms > WINDOW_LIMIT_MS:
            raise ValueError(
                f"session window must be in (0, {WINDOW_LIMIT_MS:.0f}] ms, got {window_ms!r}"
            )
        self.catalog = catalog
        self._teams = dict(teams)
        self._window_ms = float(window_ms)
        self._clock = clock
        self._label_space = None if label_space is None else frozenset(label_space)
        self._on_session_end = on_session_end
        self._sessions: dict[str, Session] = {}
        self._lock = threading.RLock()

    # -- lifecycle ---------------------------------------------------------

    def login(self, team_id: str, credential: str, now: Optional[float] = None) -> Session:
        now = self._now(now)
        if team_id not in self._teams or self._teams[team_id] != credential:
            raise AuthError(f"unknown team or bad credential for {team_id!r}")
        with self._lock:
            self._expire_stale_locked(now)
            for session in self._sessions.values():
                if session.team_id == team_id and session.state is SessionState.ACTIVE:
                    raise SessionConflictError(
                        f"team {team_id!r} already has an active session"
                    )
            session = Session(
                token=secrets.token_hex(16),
                team_id=team_id,
                login_at_ms=now,
                limit_ms=self._window_ms,
                n_images=len(self.catalog),
            )
            session.state = SessionState.ACTIVE
            self._sessions[session.token] = session
        logger.info("team %s logged in; window %.0f ms", team_id, self._window_ms)
        return session

    def get_image(self, token: str, index: int, now: Optional[float] = None) -> CatalogImage:
        now = self._now(now)
        session = self._resolve_active(token, now)
        image = self.catalog.get(index)
        with session.lock:
            session.images_served.add(index)
        return image

    def post_result(
        self,
        token: str,
        image_id: str,
        detections: Sequence[Detection],
        now: Optional[float] = None,
    ) -> int:
        now = self._now(now)
        session = self._resolve_active(token, now)
        if image_id not in self.catalog.ids:
            raise BadRequestError(f"image_id {image_id!r} is not in the catalog")
        for d in detections:
            if d.image_id != image_id:
                raise BadRequestError(
                    f"detection image_id {d.image_id!r} does not match posted image {image_id!r}"
                )
            if self._label_space is not None and d.category_id not in self._label_space:
                raise BadRequestError(f"category_id {d.category_id} outside the label space")
        return self._apply_answers(session, [(image_id, tuple(detections))])

    def post_result_lines(self, token: str, text: str, now: Optional[float] = None) -> int:
        """Wire-format intake; lines may address several images in one post."""
        now = self._now(now)
        session = self._resolve_active(token, now)
        try:
            detections = parse_detection_lines(
                text, self._label_space, self.catalog.ids, source="body"
            )
        except ValueError as exc:
            raise BadRequestError(str(exc)) from exc
        groups: dict[str, list[Detection]] = {}
        for d in detections:
            groups.setdefault(d.image_id, []).append(d)
        return self._apply_answers(session, [(k, tuple(v)) for k, v in groups.items()])

    def logout(self, token: str, now: Optional[float] = None) -> Session:
        now = self._now(now)
        session = self._resolve(token, now)
        with session.lock:
            if session.state is not SessionState.ACTIVE:
                raise SessionOverError(f"session already {session.state.value}")
            session.state = SessionState.CLOSED
            session.logout_at_ms = min(now, session.deadline_ms)
        logger.info(
            "team %s logged out at +%.0f ms", session.team_id, session.window_end_relative_ms()
        )
        self._session_ended(session)
        return session

    def expire_stale(self, now: Optional[float] = None) -> list[Session]:
        """Expire every active session past its deadline; returns those expired."""
        now = self._now(now)
        with self._lock:
            return self._expire_stale_locked(now)

    def close_all(self, now: Optional[float] = None) -> list[Session]:
        """Shutdown sweep: every active session expires at min(now, deadline)."""
        now = self._now(now)
        ended = []
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            with session.lock:
                if session.state is not SessionState.ACTIVE:
                    continue
                session.state = SessionState.EXPIRED
                session.logout_at_ms = min(now, session.deadline_ms)
            ended.append(session)
            self._session_ended(session)
        return ended

    def sessions(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())

    # -- internals ---------------------------------------------------------

    def _now(self, now: Optional[float]) -> float:
        return float(self._clock() if now is None else now)

    def _resolve(self, token: str, now: float) -> Session:
        with self._lock:
            session = self._sessions.get(token)
        if session is None:
            raise UnknownSessionError("unknown session token")
        self._expire_if_stale(session, now)
        return session

    def _resolve_active(self, token: str, now: float) -> Session:
        session = self._resolve(token, now)
        if session.state is not SessionState.ACTIVE:
            raise SessionOverError(
                f"session is {session.state.value}; the window has ended"
            )
        return session

    def _expire_if_stale(self, session: Session, now: float) -> None:
        ended = False
        with session.lock:
            if session.state is SessionState.ACTIVE and now > session.deadline_ms:
                session.state = SessionState.EXPIRED
                session.logout_at_ms = session.deadline_ms
                ended = True
        if ended:
            logger.info(
                "session for team %s expired at the %.0f ms limit",
                session.team_id,
                session.limit_ms,
            )
            self._session_ended(session)

    def _expire_stale_locked(self, now: float) -> list[Session]:
        expired = []
        for session in self._sessions.values():
            before = session.state
            self._expire_if_stale(session, now)
            if before is SessionState.ACTIVE and session.state is SessionState.EXPIRED:
                expired.append(session)
        return expired

    def _apply_answers(
        self, session: Session, groups: Sequence[tuple[str, tuple[Detection, ...]]]
    ) -> int:
        accepted = 0
        with session.lock:
            if session.state is not SessionState.ACTIVE:
                raise SessionOverError("session ended while the post was being applied")
            for image_id, detections in groups:
                session.answers[image_id] = detections
                accepted += len(detections)
        return accepted

    def _session_ended(self, session: Session) -> None:
        if self._on_session_end is None:
            return
        try:
            self._on_session_end(session)
        except Exception:
            logger.exception("session-end hook failed for team %s", session.team_id)


# ---------------------------------------------------------------------------
# scoring a finished session

def finalize_session(
    record: SessionRecord,
    gts: GroundTruthSet,
    trace: PowerTrace,
    track: str = "track2",
    max_gap_ms: float = DEFAULT_MAX_GAP_MS,
) -> dict:
    """Compose mAP over all ground truth with the trace energy into a report.

    Unanswered images contribute only misses through the recall denominators.
    """
    if record.state not in ("closed", "expired"):
        raise ValueError(f"session must be closed or expired before scoring, is {record.state!r}")
    detections = [d for dets in record.answers.values() for d in dets]
    map_value, per_class = mean_average_precision(
        detections, gts.objects, gts.label_space
    )
    window = EnergyWindow(0.0, record.window_end_ms)
    energy_wh = integrate_energy(trace, window, max_gap_ms)
    score = compute_score(map_value, energy_wh)
    return {
        "team_id": record.team_id,
        "track": track,
        "state": record.state,
        "n_images": record.n_images,
        "images_served": len(record.images_served),
        "images_answered": len(record.answers),
        "detections_posted": len(detections),
        "window_start_ms": 0.0,
        "window_end_ms": record.window_end_ms,
        "window_limit_ms": record.window_limit_ms,
        "map": map_value,
        "per_class": [
            {
                "category_id": c.category_id,
                "ap": c.ap,
                "num_gt": c.num_gt,
                "num_tp": c.num_tp,
                "num_fp": c.num_fp,
            }
            for c in per_class
        ],
        "energy_wh": energy_wh,
        "score": score,
        "components": {"map": map_value, "energy_wh": energy_wh},
        "clock_note": CLOCK_NOTE,
    }


def save_session_record(record: SessionRecord, directory) -> Path:
    """Persist session.json + answers.txt for later scoring; returns the dir."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "team_id": record.team_id,
        "state": record.state,
        "window_start_ms": 0.0,
        "window_end_ms": record.window_end_ms,
        "window_limit_ms": record.window_limit_ms,
        "n_images": record.n_images,
        "images_served": list(record.images_served),
    }
    (directory / "session.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    lines = []
    for image_id in record.answers:
        for d in record.answers[image_id]:
            lines.append(format_detection_line(d))
    (directory / "answers.txt").write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )
    return directory


def load_session_record(directory, label_space=None) -> SessionRecord:
    """Rehydrate a persisted session directory."""
    directory = Path(directory)
    meta_path = directory / "session.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"no session.json under {directory}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    answers_path = directory / "answers.txt"
    detections = (
        load_detections(answers_path, label_space=label_space)
        if answers_path.exists()
        else []
    )
    answers: dict[str, tuple[Detection, ...]] = {}
    for d in detections:
        answers[d.image_id] = answers.get(d.image_id, ()) + (d,)
    return SessionRecord(
        team_id=meta["team_id"],
        state=meta["state"],
        window_end_ms=float(meta["window_end_ms"]),
        window_limit_ms=float(meta["window_limit_ms"]),
        n_images=int(meta["n_images"]),
        images_served=tuple(meta.get("images_served", ())),
        answers=answers,
    )


# ---------------------------------------------------------------------------
# HTTP layer

class RefereeHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, referee: Referee):
        super().__init__(address, _RefereeHandler)
        self.referee = referee


class _RefereeHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "lpref-referee/0.1"

    def log_message(self, fmt, *args):
        logger.debug("http %s", fmt % args)

    # -- helpers -----------------------------------------------------------

    @property
    def referee(self) -> Referee:
        return self.server.referee

    def _bearer_token(self) -> str:
        auth = self.headers.get("Authorization", "")
        if not auth.startswith("Bearer ") or not auth[7:].strip():
            raise AuthError("missing or malformed Authorization: Bearer header")
        return auth[7:].strip()

    def _read_text_body(self) -> str:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length > 0 else b""
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BadRequestError(f"request body is not valid UTF-8: {exc}") from exc

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_image(self, image: CatalogImage) -> None:
        self.send_response(200)
        self.send_header("Content-Type", image.media_type)
        self.send_header("Content-Length", str(len(image.payload)))
        self.end_headers()
        self.wfile.write(image.payload)

    def _dispatch(self, handler) -> None:
        try:
            handler()
        except RefereeError as exc:
            self._send_json(exc.http_status, {"error": str(exc)})
        except Exception:
            logger.exception("unhandled error in %s %s", self.command, self.path)
            self._send_json(500, {"error": "internal referee error"})

    # -- verbs -------------------------------------------------------------

    def do_POST(self):
        self._dispatch(self._handle_post)

    def do_GET(self):
        self._dispatch(self._handle_get)

    def _handle_post(self):
        path = urlparse(self.path).path
        if path == "/v1/login":
            form = parse_qs(self._read_text_body())
            team_id = form.get("team_id", [""])[0]
            credential = form.get("credential", [""])[0]
            session = self.referee.login(team_id, credential)
            self._send_json(
                200,
                {
                    "token": session.token,
                    "window_start_ms": 0,
                    "n_images": session.n_images,
                },
            )
        elif path == "/v1/result":
            token = self._bearer_token()
            accepted = self.referee.post_result_lines(token, self._read_text_body())
            self._send_json(200, {"accepted": accepted})
        elif path == "/v1/logout":
            token = self._bearer_token()
            self._read_text_body()
            session = self.referee.logout(token)
            self._send_json(
                200,
                {
                    "window_start_ms": 0,
                    "window_end_ms": session.window_end_relative_ms(),
                    "state": session.state.value,
                },
            )
        else:
            raise NotFoundError(f"unknown endpoint {path!r}")

    def _handle_get(self):
        path = urlparse(self.path).path
        if path.startswith("/v1/image/"):
            token = self._bearer_token()
            tail = path[len("/v1/image/") :]
            try:
                index = int(tail)
            except ValueError:
                raise NotFoundError(f"image index {tail!r} must be an integer") from None
            image = self.referee.get_image(token, index)
            self._send_image(image)
        else:
            raise NotFoundError(f"unknown endpoint {path!r}")


# ---------------------------------------------------------------------------
# serve-time composition

@dataclass
class RefereeConfig:
    """Operator configuration for `lpref serve` (JSON file)."""

    catalog_dir: Path
    teams: dict
    listen_host: str = "127.0.0.1"
    listen_port: int = 8321
    ground_truth: Optional[Path] = None
    labels: Optional[Path] = None
    window_ms: float = WINDOW_LIMIT_MS
    report_dir: Path = Path("lpref-runs")
    trace_dir: Optional[Path] = None
    track: str = "track2"

    _KEYS = {
        "listen",
        "catalog_dir",
        "teams",
        "ground_truth",
        "labels",
        "window_s",
        "report_dir",
        "trace_dir",
        "track",
    }

    @classmethod
    def load(cls, path) -> "RefereeConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from exc
        unknown = set(data) - cls._KEYS
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        for key in ("catalog_dir", "teams"):
            if key not in data:
                raise ValueError(f"{path}: missing required config key {key!r}")
        if not isinstance(data["teams"], dict) or not data["teams"]:
            raise ValueError(f"{path}: 'teams' must be a non-empty object of team_id -> credential")
        host, port = "127.0.0.1", 8321
        if "listen" in data:
            listen = str(data["listen"])
            if ":" not in listen:
                raise ValueError(f"{path}: 'listen' must be '<host>:<port>', got {listen!r}")
            host, port_text = listen.rsplit(":", 1)
            try:
                port = int(port_text)
            except ValueError:
                raise ValueError(f"{path}: listen port {port_text!r} is not an integer") from None
        base = path.parent

        def _resolve(key):
            return (base / data[key]).resolve() if key in data and data[key] else None

        window_s = float(data.get("window_s", WINDOW_LIMIT_MS / 1000.0))
        return cls(
            catalog_dir=(base / data["catalog_dir"]).resolve(),
            teams=dict(data["teams"]),
            listen_host=host,
            listen_port=port,
            ground_truth=_resolve("ground_truth"),
            labels=_resolve("labels"),
            window_ms=window_s * 1000.0,
            report_dir=(base / data.get("report_dir", "lpref-runs")).resolve(),
            trace_dir=_resolve("trace_dir"),
            track=str(data.get("track", "track2")),
        )


class RefereeService:
    """Catalog + ground truth + referee + persistence, wired for `serve`.

    On session end (logout, expiry, or shutdown) the session record is
    persisted under ``<report_dir>/sessions/<token>/``. When a power trace is
    found at ``<trace_dir>/<token>.csv`` or ``<trace_dir>/<team_id>.csv`` a
    full run report is also scored and appended to the run store; otherwise
    scoring is deferred to ``lpref score-session``.
    """

    def __init__(self, config: RefereeConfig, clock: Callable[[], float] = system_clock_ms):
        self.config = config
        self.catalog = ImageCatalog.from_dir(config.catalog_dir)
        self.ground_truth: Optional[GroundTruthSet] = None
        if config.ground_truth is not None:
            self.ground_truth = load_ground_truth(config.ground_truth, config.labels)
        self.store = RunStore(Path(config.report_dir) / "runs")
        self.sessions_dir = Path(config.report_dir) / "sessions"
        self.referee = Referee(
            self.catalog,
            config.teams,
            window_ms=config.window_ms,
            clock=clock,
            label_space=set(self.ground_truth.label_space) if self.ground_truth else None,
            on_session_end=self._on_session_end,
        )
        self._server: Optional[RefereeHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    def start(self) -> tuple[str, int]:
        """Bind and serve on a background thread; returns (host, port)."""
        self._server = RefereeHTTPServer(
            (self.config.listen_host, self.config.listen_port), self.referee
        )
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="lpref-referee", daemon=True
        )
        self._thread.start()
        host, port = self._server.server_address[:2]
        logger.info("referee ready on %s:%d serving %d images", host, port, len(self.catalog))
        return host, port

    def shutdown(self) -> None:
        """Stop serving, expire remaining sessions, persist their records."""
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=10.0)
            self._thread = None
        ended = self.referee.close_all()
        if ended:
            logger.info("shutdown expired %d session(s)", len(ended))

    # -- persistence hook ----------------------------------------------------

    def _on_session_end(self, session: Session) -> None:
        try:
            record = session.to_record()
            directory = save_session_record(record, self.sessions_dir / session.token)
            logger.info("session record persisted at %s", directory)
            trace = self._find_trace(session)
            if trace is None:
                logger.info(
                    "no power trace for team %s; run report deferred to score-session",
                    session.team_id,
                )
                return
            if self.ground_truth is None:
                logger.info("no ground truth configured; run report deferred")
                return
            report = finalize_session(record, self.ground_truth, trace, track=self.config.track)
            run_id = self.store.persist_run(report)
            logger.info(
                "run report %s persisted for team %s (score %.4f)",
                run_id,
                session.team_id,
                report["score"],
            )
        except Exception:
            logger.exception("failed to persist session for team %s", session.team_id)

    def _find_trace(self, session: Session) -> Optional[PowerTrace]:
        if self.config.trace_dir is None:
            return None
        for name in (f"{session.token}.csv", f"{session.team_id}.csv"):
            candidate = Path(self.config.trace_dir) / name
            if candidate.exists():
                return load_power_trace(candidate)
        return None
