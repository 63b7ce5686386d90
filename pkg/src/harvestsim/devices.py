"""Device energy models: state tables, device instances, periodic sensing.

A device is a named state machine whose states map to current draws. State
switches go through the source (integrate-then-switch), so the energy drawn
at the old current is booked before the new current applies. While the
source is depleted every device sits in its off state at 0 A; the requested
state is remembered and restored on recharge.
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Mapping

if TYPE_CHECKING:
    from .kernel import Simulator
    from .sources import EnergySource

log = logging.getLogger(__name__)


class UnknownStateError(ValueError):
    """State name not present in the device's state table."""


class DeviceStateTable:
    """Mapping of state names to current draws in amperes.

    The designated off state draws exactly 0 A; it is added automatically
    when absent so depletion can always force a device off.
    """

    def __init__(self, currents_a: Mapping[str, float], off_state: str = "off"):
        states = dict(currents_a)
        for name, current in states.items():
            if not isinstance(current, (int, float)) or not math.isfinite(current) or current < 0:
                raise ValueError(f"state {name!r}: current must be finite and >= 0, got {current}")
        if off_state in states:
            if states[off_state] != 0.0:
                raise ValueError(f"off state {off_state!r} must draw exactly 0 A")
        else:
            states[off_state] = 0.0
        self._currents = {name: float(c) for name, c in states.items()}
        self.off_state = off_state

    @classmethod
    def from_powers(cls, powers_w: Mapping[str, float], nominal_voltage_v: float,
                    off_state: str = "off") -> "DeviceStateTable":
        """Convert per-state powers to currents at the source's nominal voltage."""
        if nominal_voltage_v <= 0:
            raise ValueError(f"nominal voltage must be > 0, got {nominal_voltage_v}")
        return cls({name: p / nominal_voltage_v for name, p in powers_w.items()}, off_state)

    def __contains__(self, state: str) -> bool:
        return state in self._currents

    @property
    def states(self) -> tuple:
        return tuple(self._currents)

    def current_a(self, state: str) -> float:
        try:
            return self._currents[state]
        except KeyError:
            raise UnknownStateError(f"unknown device state {state!r}") from None


class Device:
    """A consumer attached to one energy source.

    ``requested_state`` is what the node asked for; ``state`` is what the
    device actually draws, which is the off state whenever the source is
    depleted.
    """

    def __init__(self, name: str, table: DeviceStateTable, initial_state: str):
        if initial_state not in table:
            raise UnknownStateError(f"initial state {initial_state!r} not in table")
        self.name = name
        self.table = table
        self.requested_state = initial_state
        self._state = initial_state
        self._consumed_j = 0.0
        self._source: "EnergySource | None" = None
        # Called with (new_state, time) on every actual state switch.
        self.state_listeners: list[Callable[[str, float], None]] = []

    def _attach(self, source: "EnergySource") -> None:
        if self._source is not None:
            raise ValueError(f"device {self.name!r} is already attached")
        self._source = source

    @property
    def source(self) -> "EnergySource | None":
        return self._source

    @property
    def state(self) -> str:
        return self._state

    @property
    def current_a(self) -> float:
        return self.table.current_a(self._state)

    def set_state(self, state: str) -> None:
        """Request a state switch; energy up to now accrues at the old current.

        On a depleted source the request is only remembered: the device keeps
        drawing 0 A and moves to the requested state once recharged.
        """
        if state not in self.table:
            raise UnknownStateError(f"unknown device state {state!r}")
        if self._source is None:
            raise RuntimeError(f"device {self.name!r} is not attached to a source")
        self.requested_state = state
        self._source.notify_current_change(self, state)

    def energy_consumed(self) -> float:
        """Energy in joules this device has consumed through the current time."""
        if self._source is not None:
            self._source.sync()
        return self._consumed_j

    # -- source-driven transitions (no integration: the caller just synced) --

    def _apply_state(self, state: str) -> None:
        if state != self._state:
            self._state = state
            self._emit(state)

    def _force_off(self) -> None:
        self._apply_state(self.table.off_state)

    def _resume(self) -> None:
        self._apply_state(self.requested_state)

    def _emit(self, state: str) -> None:
        if self.state_listeners and self._source is not None:
            t = self._source.sim.now
            for cb in self.state_listeners:
                cb(state, t)


@dataclass
class SensorSchedule:
    """Periodic sensing pattern: active for a short window once per period."""

    period_s: float
    active_duration_s: float
    start_offset_s: float = 0.0

    def __post_init__(self) -> None:
        if self.period_s <= 0:
            raise ValueError(f"period_s must be > 0, got {self.period_s}")
        if not 0 < self.active_duration_s < self.period_s:
            raise ValueError(
                "active_duration_s must lie in (0, period_s), got "
                f"{self.active_duration_s} with period {self.period_s}"
            )
        if self.start_offset_s < 0:
            raise ValueError(f"start_offset_s must be >= 0, got {self.start_offset_s}")


class PeriodicSensor:
    """Drives a device through active/idle cycles on a fixed schedule.

    Activations are scheduled at absolute times k*period + offset so long
    runs accumulate no drift. While the source is depleted the requests are
    silently absorbed by the device; sensing resumes after a recharge.
    """

    def __init__(self, sim: "Simulator", device: Device, schedule: SensorSchedule,
                 active_state: str = "active", idle_state: str = "idle"):
        for state in (active_state, idle_state):
            if state not in device.table:
                raise UnknownStateError(f"schedule references unknown state {state!r}")
        self.sim = sim
        self.device = device
        self.schedule = schedule
        self.active_state = active_state
        self.idle_state = idle_state
        self._anchor = 0.0
        self._cycle = 0

    def start(self) -> None:
        self._anchor = self.sim.now + self.schedule.start_offset_s
        self.sim.schedule(self._anchor, self._activate)

    def _activate(self) -> None:
        self.device.set_state(self.active_state)
        self.sim.schedule(self.sim.now + self.schedule.active_duration_s, self._deactivate)
        self._cycle += 1
        self.sim.schedule(self._anchor + self._cycle * self.schedule.period_s,
                          self._activate)

    def _deactivate(self) -> None:
        self.device.set_state(self.idle_state)
