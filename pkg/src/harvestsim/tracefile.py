"""Harvest trace file parsing.

Format: plain-text CSV with header ``time_s,power_w``, one sample per line,
decimal point, no thousands separators. Lines starting with ``#`` are
comments; the optional directive ``# duration_s=<value>`` sets the trace
duration used for wrapping (default: last sample time). Times must be
strictly increasing and powers non-negative.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

from .harvesters import HarvestTrace

log = logging.getLogger(__name__)


class TraceError(Exception):
    """Base class for trace file problems."""


class TraceParseError(TraceError):
    """Malformed trace file (bad header, field count, or number format)."""


class TraceMonotonicityError(TraceError):
    """Sample times not strictly increasing."""


class TraceNegativePowerError(TraceError):
    """A sample carries negative power."""


@dataclass
class TraceInfo:
    """Summary of a parsed trace, as printed by the trace-info command."""

    path: str
    sample_count: int
    duration_s: float
    min_power_w: float
    max_power_w: float


def load_trace(path: str | Path, wrap: bool = False, scale: float = 1.0) -> HarvestTrace:
    """Parse and validate a trace file into a HarvestTrace."""
    path = Path(path)
    samples: list[tuple[float, float]] = []
    duration_s: float | None = None
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                directive = line[1:].strip()
                if directive.startswith("duration_s"):
                    _, _, value = directive.partition("=")
                    try:
                        duration_s = float(value.strip())
                    except ValueError:
                        raise TraceParseError(
                            f"{path}:{lineno}: bad duration_s directive {value.strip()!r}"
                        ) from None
                continue
            if not header_seen:
                if line != "time_s,power_w":
                    raise TraceParseError(
                        f"{path}:{lineno}: expected header 'time_s,power_w', got {line!r}"
                    )
                header_seen = True
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise TraceParseError(
                    f"{path}:{lineno}: expected 2 fields, got {len(fields)}"
                )
            try:
                t = float(fields[0])
                p = float(fields[1])
            except ValueError:
                raise TraceParseError(
                    f"{path}:{lineno}: non-numeric sample {line!r}"
                ) from None
            if samples and t <= samples[-1][0]:
                raise TraceMonotonicityError(
                    f"{path}:{lineno}: time {t} does not increase past {samples[-1][0]}"
                )
            if p < 0:
                raise TraceNegativePowerError(
                    f"{path}:{lineno}: negative power {p}"
                )
            samples.append((t, p))
    if not header_seen:
        raise TraceParseError(f"{path}: missing 'time_s,power_w' header")
    if not samples:
        raise TraceParseError(f"{path}: trace contains no samples")
    if duration_s is not None and duration_s < samples[-1][0]:
        raise TraceParseError(
            f"{path}: duration_s={duration_s} is smaller than the final sample time "
            f"{samples[-1][0]}"
        )
    trace = HarvestTrace(samples=samples, wrap=wrap, scale=scale, duration_s=duration_s)
    log.debug("loaded trace %s: %d samples over %gs", path, len(samples), trace.duration)
    return trace


def trace_info(path: str | Path) -> TraceInfo:
    """Parse a trace and summarize it (sample count, duration, power range)."""
    trace = load_trace(path)
    powers = [p for _, p in trace.samples]
    return TraceInfo(
        path=str(path),
        sample_count=len(trace.samples),
        duration_s=trace.duration,
        min_power_w=min(powers),
        max_power_w=max(powers),
    )
