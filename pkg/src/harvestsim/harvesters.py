"""Energy harvesters: uniform-random power and trace replay.

Both harvesters deliver a non-negative, piecewise-constant power to their
source via notify_harvest_change and keep a record of every level change,
so the energy collected over any past time slot can be integrated exactly.
"""

import bisect
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .kernel import Simulator
    from .sources import EnergySource

log = logging.getLogger(__name__)


class SlotInFutureError(ValueError):
    """slot_energy() queried beyond the current simulation time."""


@dataclass
class BasicHarvesterParams:
    """Uniform harvester: resample P ~ U[0, h_max_w] every update_period_s."""

    h_max_w: float
    update_period_s: float
    stream_tag: str = "harvester"

    def __post_init__(self) -> None:
        if self.h_max_w < 0:
            raise ValueError(f"h_max_w must be >= 0, got {self.h_max_w}")
        if self.update_period_s <= 0:
            raise ValueError(f"update_period_s must be > 0, got {self.update_period_s}")


@dataclass
class HarvestTrace:
    """Zero-order-hold power trace: (time_s, power_w) samples, optional wrap.

    Between samples the last power holds; before the first sample the first
    power holds. With wrap=True the trace repeats with period duration_s
    (defaulting to the last sample time). Without wrap the final sample's
    power holds indefinitely.
    """

    samples: list[tuple[float, float]]
    wrap: bool = False
    scale: float = 1.0
    duration_s: float | None = None

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("trace must contain at least one sample")
        last_t = None
        for t, p in self.samples:
            if last_t is not None and t <= last_t:
                raise ValueError(f"trace times must be strictly increasing at t={t}")
            if p < 0:
                raise ValueError(f"trace power must be >= 0, got {p} at t={t}")
            last_t = t
        if self.scale < 0:
            raise ValueError(f"scale must be >= 0, got {self.scale}")
        if self.duration_s is not None and self.duration_s < self.samples[-1][0]:
            raise ValueError(
                f"duration_s={self.duration_s} is smaller than the final sample "
                f"time {self.samples[-1][0]}"
            )
        self._times = [t for t, _ in self.samples]

    @property
    def duration(self) -> float:
        return self.duration_s if self.duration_s is not None else self.samples[-1][0]

    @property
    def max_power_w(self) -> float:
        return self.scale * max(p for _, p in self.samples)

    def power_at(self, t: float) -> float:
        """Held power at time t (scaled); wraps modulo the trace duration."""
        if self.wrap and self.duration > 0:
            t = math.fmod(t, self.duration)
        i = bisect.bisect_right(self._times, t) - 1
        if i < 0:
            i = 0  # before the first sample: hold the first power
        return self.scale * self.samples[i][1]


class _PowerLog:
    """Timestamped record of power levels with exact piecewise integration."""

    def __init__(self) -> None:
        self._times: list[float] = []
        self._powers: list[float] = []

    def append(self, t: float, power: float) -> None:
        if self._times and t == self._times[-1]:
            self._powers[-1] = power  # later change at the same instant wins
        else:
            self._times.append(t)
            self._powers.append(power)

    @property
    def current_power(self) -> float:
        return self._powers[-1] if self._powers else 0.0

    def integral(self, start: float, end: float) -> float:
        """Integral of the held power over [start, end]; 0 W before any record."""
        if not self._times or end <= self._times[0]:
            return 0.0
        total = 0.0
        i = max(bisect.bisect_right(self._times, start) - 1, 0)
        while i < len(self._times):
            seg_start = self._times[i]
            seg_end = self._times[i + 1] if i + 1 < len(self._times) else math.inf
            lo = max(start, seg_start)
            hi = min(end, seg_end)
            if hi > lo:
                total += self._powers[i] * (hi - lo)
            if seg_end >= end:
                break
            i += 1
        return total


class _HarvesterBase:
    """Shared wiring: source attachment, power log, slot-energy queries."""

    def __init__(self, sim: "Simulator"):
        self.sim = sim
        self._source: "EnergySource | None" = None
        self._log = _PowerLog()

    def attach(self, source: "EnergySource") -> None:
        source._attach_harvester(self)
        self._source = source

    @property
    def source(self) -> "EnergySource | None":
        return self._source

    @property
    def current_power_w(self) -> float:
        return self._log.current_power

    def _set_power(self, power_w: float) -> None:
        assert self._source is not None
        self._source.notify_harvest_change(power_w)
        self._log.append(self.sim.now, power_w)

    def slot_energy(self, slot_start: float, slot_end: float) -> float:
        """Energy in joules harvested over [slot_start, slot_end]."""
        if slot_end > self.sim.now:
            raise SlotInFutureError(
                f"slot end {slot_end} lies beyond the current time {self.sim.now}"
            )
        if slot_start > slot_end:
            raise ValueError(f"slot_start={slot_start} exceeds slot_end={slot_end}")
        return self._log.integral(slot_start, slot_end)

    def _require_attached(self) -> None:
        if self._source is None:
            raise RuntimeError("harvester must be attached to a source before start()")


class BasicHarvester(_HarvesterBase):
    """Resamples P ~ Uniform[0, h_max_w] on a fixed period from its own stream."""

    def __init__(self, sim: "Simulator", params: BasicHarvesterParams):
        super().__init__(sim)
        self.params = params
        self._stream = sim.stream(params.stream_tag)
        self._updates = 0
        self._start_time = 0.0

    def start(self) -> None:
        """Schedule the first resample at the current time, then every period."""
        self._require_attached()
        self._start_time = self.sim.now
        self.sim.schedule(self.sim.now, self._update)

    def _update(self) -> None:
        power = self._stream.uniform(0.0, self.params.h_max_w)
        self._set_power(power)
        self._updates += 1
        next_at = self._start_time + self._updates * self.params.update_period_s
        self.sim.schedule(next_at, self._update)


class TraceHarvester(_HarvesterBase):
    """Replays a HarvestTrace, updating the source at every held-value boundary."""

    def __init__(self, sim: "Simulator", trace: HarvestTrace):
        super().__init__(sim)
        self.trace = trace
        self.exhausted = False
        # Held-value boundaries within one trace period, anchored at t=0.
        offsets = {t for t, _ in trace.samples}
        offsets.add(0.0)
        self._offsets = sorted(offsets)

    def start(self) -> None:
        self._require_attached()
        self.sim.schedule(self.sim.now, self._on_breakpoint)

    def _on_breakpoint(self) -> None:
        t = self.sim.now
        self._set_power(self.trace.power_at(t))
        nxt = self._next_breakpoint_after(t)
        if nxt is None:
            if not self.exhausted:
                self.exhausted = True
                log.info("trace exhausted at t=%g; holding %g W",
                         t, self.current_power_w)
        else:
            self.sim.schedule(nxt, self._on_breakpoint)

    def _next_breakpoint_after(self, t: float) -> float | None:
        if self.trace.wrap and self.trace.duration > 0:
            period = self.trace.duration
            cycle = math.floor(t / period)
            for k in (cycle, cycle + 1):
                base = k * period
                for offset in self._offsets:
                    candidate = base + offset
                    if candidate > t:
                        return candidate
            return None  # unreachable: cycle+1 always yields a later point
        for offset in self._offsets:
            if offset > t:
                return offset
        return None
