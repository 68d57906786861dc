"""Power-trace integration over a session window and the mAP/Wh score."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from . import _kernels

logger = logging.getLogger(__name__)

MS_PER_HOUR = 3_600_000.0
DEFAULT_MAX_GAP_MS = 1000.0


class TraceError(ValueError):
    """A power trace cannot be used for scoring."""


class MissingTraceError(TraceError):
    """The trace has no samples."""


class TraceCoverageError(TraceError):
    """The trace does not span the requested window."""


@dataclass(frozen=True)
class PowerSample:
    """One meter reading: milliseconds since session epoch, instantaneous watts."""

    t_ms: float
    watts: float

    def __post_init__(self):
        object.__setattr__(self, "t_ms", float(self.t_ms))
        object.__setattr__(self, "watts", float(self.watts))
        if not math.isfinite(self.t_ms):
            raise ValueError(f"sample timestamp must be finite, got {self.t_ms!r}")
        if not (math.isfinite(self.watts) and self.watts >= 0.0):
            raise ValueError(f"watts must be finite and >= 0, got {self.watts!r}")


class PowerTrace:
    """Time-ordered watt samples; timestamps strictly increasing."""

    __slots__ = ("t_ms", "watts")

    def __init__(self, samples: Iterable[Union[PowerSample, tuple[float, float]]]):
        ts: list[float] = []
        ws: list[float] = []
        for sample in samples:
            if not isinstance(sample, PowerSample):
                sample = PowerSample(float(sample[0]), float(sample[1]))
            ts.append(sample.t_ms)
            ws.append(sample.watts)
        self.t_ms = np.asarray(ts, dtype=np.float64)
        self.watts = np.asarray(ws, dtype=np.float64)
        if len(self.t_ms) > 1 and not np.all(np.diff(self.t_ms) > 0.0):
            i = int(np.argmin(np.diff(self.t_ms)))
            raise ValueError(
                f"trace timestamps must be strictly increasing; sample {i + 1} "
                f"({self.t_ms[i + 1]} ms) does not follow {self.t_ms[i]} ms"
            )

    def __len__(self) -> int:
        return int(self.t_ms.size)

    @property
    def span_ms(self) -> tuple[float, float]:
        if len(self) == 0:
            raise MissingTraceError("power trace is empty")
        return float(self.t_ms[0]), float(self.t_ms[-1])


@dataclass(frozen=True)
class EnergyWindow:
    """Integration interval in milliseconds since session epoch."""

    start_ms: float
    end_ms: float

    def __post_init__(self):
        object.__setattr__(self, "start_ms", float(self.start_ms))
        object.__setattr__(self, "end_ms", float(self.end_ms))
        if not (math.isfinite(self.start_ms) and math.isfinite(self.end_ms)):
            raise ValueError("window bounds must be finite")
        if not self.start_ms < self.end_ms:
            raise ValueError(
                f"window start must precede end, got [{self.start_ms}, {self.end_ms}]"
            )

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


def load_power_trace(path) -> PowerTrace:
    """Parse a trace file: one `<t_ms>,<watts>` sample per line, `#` comments."""
    path = Path(path)
    samples: list[PowerSample] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise TraceError(f"{path}:{lineno}: expected '<t_ms>,<watts>', got {line!r}")
            try:
                samples.append(PowerSample(float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise TraceError(f"{path}:{lineno}: {exc}") from exc
    try:
        return PowerTrace(samples)
    except ValueError as exc:
        raise TraceError(f"{path}: {exc}") from exc


def integrate_energy(
    trace: PowerTrace,
    window: EnergyWindow,
    max_gap_ms: float = DEFAULT_MAX_GAP_MS,
) -> float:
    """Watt-hours over the window: trapezoid rule with interpolated boundaries.

    The trace must bracket the window. Sample gaps larger than ``max_gap_ms``
    are logged as suspicious but do not fail the run.
    """
    if len(trace) == 0:
        raise MissingTraceError("power trace is empty; nothing to integrate")
    first, last = trace.span_ms
    if first > window.start_ms or last < window.end_ms:
        gaps = []
        if first > window.start_ms:
            gaps.append(f"[{window.start_ms}, {min(first, window.end_ms)}] ms before the first sample")
        if last < window.end_ms:
            gaps.append(f"[{max(last, window.start_ms)}, {window.end_ms}] ms after the last sample")
        raise TraceCoverageError(
            f"trace covers [{first}, {last}] ms but the window is "
            f"[{window.start_ms}, {window.end_ms}] ms; uncovered: " + "; ".join(gaps)
        )
    if len(trace) > 1:
        diffs = np.diff(trace.t_ms)
        worst = float(diffs.max())
        if worst > max_gap_ms:
            at = int(np.argmax(diffs))
            logger.warning(
                "power trace has a %.0f ms sample gap at t=%.0f ms (threshold %.0f ms)",
                worst,
                float(trace.t_ms[at]),
                max_gap_ms,
            )
    watt_ms = _kernels.trapezoid_window(
        trace.t_ms, trace.watts, float(window.start_ms), float(window.end_ms)
    )
    return float(watt_ms) / MS_PER_HOUR


def compute_score(map_value: float, energy_wh: float) -> float:
    """Energy-normalized accuracy: mAP divided by watt-hours consumed."""
    if not (math.isfinite(map_value) and 0.0 <= map_value <= 1.0):
        raise ValueError(f"mAP must be in [0, 1], got {map_value!r}")
    if not (math.isfinite(energy_wh) and energy_wh > 0.0):
        raise ValueError(f"a scored run must consume energy; energy_wh must be > 0, got {energy_wh!r}")
    return map_value / energy_wh
