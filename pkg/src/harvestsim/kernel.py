"""Deterministic discrete-event kernel: virtual clock, event queue, seeded streams.

Times are non-negative floats in seconds (double precision gives well below
microsecond resolution over the day-scale horizons simulated here). Events
with equal fire time execute in insertion order, so a run is fully determined
by the schedule calls and the master seed.
"""

import hashlib
import heapq
import logging
import math
import random
from typing import Callable

log = logging.getLogger(__name__)


class SchedulingInPastError(ValueError):
    """Scheduling (or running) at a time earlier than the current clock."""


class InvalidRangeError(ValueError):
    """Random draw requested on an interval with lo > hi."""


def _derive_seed(master_seed: int, tag: str) -> int:
    # Hash-based derivation keeps streams independent per tag and immune to
    # PYTHONHASHSEED; adding a component never perturbs another's samples.
    digest = hashlib.sha256(f"{master_seed}:{tag}".encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")


class RandomStream:
    """Reproducible PRNG stream derived from (master_seed, component_tag)."""

    def __init__(self, master_seed: int, tag: str):
        self.master_seed = master_seed
        self.tag = tag
        self._rng = random.Random(_derive_seed(master_seed, tag))

    def random(self) -> float:
        return self._rng.random()

    def uniform(self, lo: float, hi: float) -> float:
        """Draw uniformly from [lo, hi); lo == hi returns lo."""
        if lo > hi:
            raise InvalidRangeError(f"uniform bounds reversed: lo={lo} > hi={hi}")
        return lo + (hi - lo) * self._rng.random()


class Simulator:
    """Single-threaded virtual clock plus ordered event queue.

    One instance owns one simulation; independent instances never share
    state, so separate runs may execute in parallel processes.
    """

    def __init__(self, master_seed: int = 0):
        self.master_seed = master_seed
        self._now = 0.0
        self._heap: list[tuple[float, int, Callable[[], None]]] = []
        self._pending: set[int] = set()
        self._next_id = 0
        self._stop_requested = False
        self._streams: dict[str, RandomStream] = {}

    @property
    def now(self) -> float:
        return self._now

    def stream(self, tag: str) -> RandomStream:
        """Per-component random stream; the same tag returns the same stream."""
        if tag not in self._streams:
            self._streams[tag] = RandomStream(self.master_seed, tag)
        return self._streams[tag]

    def schedule(self, at: float, action: Callable[[], None]) -> int:
        """Enqueue ``action`` to fire at time ``at``; returns a cancellable id."""
        if not (isinstance(at, (int, float)) and math.isfinite(at)):
            raise ValueError(f"event time must be finite, got {at!r}")
        if at < self._now:
            raise SchedulingInPastError(
                f"cannot schedule at t={at} (now={self._now})"
            )
        event_id = self._next_id
        self._next_id += 1
        heapq.heappush(self._heap, (float(at), event_id, action))
        self._pending.add(event_id)
        return event_id

    def schedule_in(self, delay: float, action: Callable[[], None]) -> int:
        return self.schedule(self._now + delay, action)

    def cancel(self, event_id: int) -> bool:
        """True iff the event existed and had not fired; cancelled events never run."""
        if event_id in self._pending:
            self._pending.discard(event_id)
            return True
        return False

    def stop(self) -> None:
        """Request that run_until return after the current event completes."""
        self._stop_requested = True

    def run_until(self, t_end: float) -> int:
        """Fire all events with fire_time <= t_end in order; clock ends at t_end.

        Events scheduled during execution also fire if due. Returns the number
        of events executed. If stop() was called, the clock stays at the last
        event's time instead of advancing to t_end.
        """
        if t_end < self._now:
            raise SchedulingInPastError(
                f"cannot run to t={t_end} (now={self._now})"
            )
        self._stop_requested = False
        fired = 0
        while self._heap:
            at, event_id, action = self._heap[0]
            if at > t_end:
                break
            heapq.heappop(self._heap)
            if event_id not in self._pending:
                continue  # cancelled
            self._pending.discard(event_id)
            self._now = at
            action()
            fired += 1
            if self._stop_requested:
                log.debug("run stopped at t=%g after %d events", self._now, fired)
                return fired
        self._now = t_end
        return fired
