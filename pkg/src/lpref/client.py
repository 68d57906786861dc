"""Reference contestant client for exercising a running referee."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from urllib.error import HTTPError
from urllib.parse import urlencode
from urllib.request import Request, urlopen

from .datasets import format_detection_line, load_detections

logger = logging.getLogger(__name__)


class ContestantError(RuntimeError):
    """The referee refused a request the replay cannot continue without."""


def _error_body(exc: HTTPError) -> str:
    try:
        return json.loads(exc.read().decode("utf-8")).get("error", str(exc))
    except Exception:
        return str(exc)


class RefereeClient:
    """Thin wrapper over the referee wire protocol."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.token = None

    def _request(self, method: str, path: str, body: bytes = b"", headers=None) -> bytes:
        headers = dict(headers or {})
        if self.token:
            headers.setdefault("Authorization", f"Bearer {self.token}")
        req = Request(self.base_url + path, data=body if method == "POST" else None,
                      headers=headers, method=method)
        with urlopen(req, timeout=self.timeout) as resp:
            return resp.read()

    def login(self, team_id: str, credential: str) -> dict:
        body = urlencode({"team_id": team_id, "credential": credential}).encode()
        try:
            reply = json.loads(self._request("POST", "/v1/login", body))
        except HTTPError as exc:
            raise ContestantError(f"login failed: {_error_body(exc)}") from exc
        self.token = reply["token"]
        return reply

    def get_image(self, index: int) -> bytes:
        try:
            return self._request("GET", f"/v1/image/{index}")
        except HTTPError as exc:
            raise ContestantError(f"image {index} fetch failed: {_error_body(exc)}") from exc

    def post_result(self, lines: str) -> dict:
        return json.loads(self._request("POST", "/v1/result", lines.encode("utf-8")))

    def logout(self) -> dict:
        return json.loads(self._request("POST", "/v1/logout"))


def simulate_contestant(
    server_url: str,
    answers_path,
    pace_ms: float = 0.0,
    team_id: str = "team",
    credential: str = "secret",
) -> dict:
    """Replay a canned run: log in, fetch every image, post answers, log out.

    Posts go one image at a time, ``pace_ms`` apart. Posts rejected because
    the window ended are counted, not fatal, so overruns replay faithfully.
    Returns a summary with the server's final window.
    """
    answers = load_detections(Path(answers_path))
    by_image: dict[str, list] = {}
    for d in answers:
        by_image.setdefault(d.image_id, []).append(d)

    client = RefereeClient(server_url)
    login = client.login(team_id, credential)
    n_images = int(login["n_images"])
    logger.info("logged in as %s; %d images to fetch", team_id, n_images)

    bytes_fetched = 0
    for index in range(1, n_images + 1):
        bytes_fetched += len(client.get_image(index))

    accepted = 0
    rejected: list[str] = []
    for image_id, dets in by_image.items():
        if pace_ms > 0:
            time.sleep(pace_ms / 1000.0)
        lines = "\n".join(format_detection_line(d) for d in dets)
        try:
            reply = client.post_result(lines)
            accepted += int(reply["accepted"])
        except HTTPError as exc:
            if exc.code == 410:
                rejected.append(image_id)
                logger.warning("post for %s rejected: window over", image_id)
            else:
                raise ContestantError(
                    f"post for {image_id} failed: {_error_body(exc)}"
                ) from exc

    try:
        window = client.logout()
    except HTTPError as exc:
        if exc.code != 410:
            raise ContestantError(f"logout failed: {_error_body(exc)}") from exc
        # Session already over (window expired mid-replay); the window is final.
        logger.warning("logout rejected: %s", _error_body(exc))
        window = {"window_start_ms": 0, "window_end_ms": None, "state": "expired"}

    summary = {
        "team_id": team_id,
        "n_images": n_images,
        "bytes_fetched": bytes_fetched,
        "detections_accepted": accepted,
        "posts_rejected_late": rejected,
        "window": window,
    }
    logger.info(
        "replay done: %d detections accepted, %d late posts, window %s",
        accepted,
        len(rejected),
        window,
    )
    return summary
