"""Energy source models: a linear basic source and a supercapacitor.

A source consumes the current drawn by its attached devices, absorbs the
harvested power it is notified about, and fires depletion/recharge callbacks
when the residual fraction crosses its thresholds. Both load and harvest are
piecewise constant between notifications, so each update integrates one
constant-power span and the energy ledger stays exact:

    residual - initial == total_harvested - clamp_loss - total_consumed

Ledger totals use compensated summation; over long runs they can grow many
orders of magnitude beyond the capacity, and naive accumulation would lose
the low-order joules the conservation check needs.
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

if TYPE_CHECKING:
    from .devices import Device
    from .kernel import Simulator

log = logging.getLogger(__name__)


class NegativeDurationError(ValueError):
    """integrate() called with a negative time span."""


class UnknownDeviceError(ValueError):
    """Notification for a device that is not attached to this source."""


class NegativePowerError(ValueError):
    """Harvested power must be non-negative."""


class _CompensatedSum:
    """Neumaier-compensated accumulator for the energy ledgers."""

    __slots__ = ("_s", "_c")

    def __init__(self) -> None:
        self._s = 0.0
        self._c = 0.0

    def add(self, x: float) -> None:
        t = self._s + x
        if abs(self._s) >= abs(x):
            self._c += (self._s - t) + x
        else:
            self._c += (x - t) + self._s
        self._s = t

    @property
    def value(self) -> float:
        return self._s + self._c


def _check_thresholds_range(low: float, high: float) -> None:
    if not 0.0 <= low < high <= 1.0:
        raise ValueError(
            f"thresholds must satisfy 0 <= low < high <= 1, got low={low} high={high}"
        )


@dataclass
class BasicSourceParams:
    """Linear source: constant supply voltage, capacity = initial energy."""

    initial_energy_j: float
    supply_voltage_v: float
    update_interval_s: float
    low_threshold: float = 0.10
    high_threshold: float = 0.15

    def __post_init__(self) -> None:
        if self.initial_energy_j <= 0:
            raise ValueError(f"initial_energy_j must be > 0, got {self.initial_energy_j}")
        if self.supply_voltage_v <= 0:
            raise ValueError(f"supply_voltage_v must be > 0, got {self.supply_voltage_v}")
        if self.update_interval_s <= 0:
            raise ValueError(f"update_interval_s must be > 0, got {self.update_interval_s}")
        _check_thresholds_range(self.low_threshold, self.high_threshold)


@dataclass
class SupercapParams:
    """Supercapacitor source: E = C*V^2/2, usable window between cutoff and max voltage."""

    capacitance_f: float
    initial_voltage_v: float
    max_voltage_v: float
    cutoff_voltage_v: float
    update_interval_s: float
    low_threshold: float = 0.10
    high_threshold: float = 0.15

    def __post_init__(self) -> None:
        if self.capacitance_f <= 0:
            raise ValueError(f"capacitance_f must be > 0, got {self.capacitance_f}")
        if not 0.0 <= self.cutoff_voltage_v < self.initial_voltage_v:
            raise ValueError(
                "cutoff_voltage_v must lie in [0, initial_voltage_v), got "
                f"cutoff={self.cutoff_voltage_v} initial={self.initial_voltage_v}"
            )
        if self.initial_voltage_v > self.max_voltage_v:
            raise ValueError(
                f"initial_voltage_v={self.initial_voltage_v} exceeds "
                f"max_voltage_v={self.max_voltage_v}"
            )
        if self.update_interval_s <= 0:
            raise ValueError(f"update_interval_s must be > 0, got {self.update_interval_s}")
        _check_thresholds_range(self.low_threshold, self.high_threshold)


class EnergySource:
    """Base class holding the residual-energy state machine and ledgers.

    Subclasses define the capacity, the effective discharge voltage of a
    span, and the residual fraction. All mutation happens inside kernel
    event callbacks of a single simulation instance.
    """

    def __init__(self, sim: "Simulator", update_interval_s: float,
                 low_threshold: float, high_threshold: float,
                 initial_energy_j: float):
        self.sim = sim
        self.update_interval_s = update_interval_s
        self.low_threshold = low_threshold
        self.high_threshold = high_threshold
        self.initial_energy_j = initial_energy_j
        self._energy_j = initial_energy_j
        self._last_update = sim.now
        self._harvest_power_w = 0.0
        self._devices: list["Device"] = []
        self._harvester = None
        self.depleted = False
        self._consumed = _CompensatedSum()
        self._harvested = _CompensatedSum()
        self._clamp_loss = _CompensatedSum()
        # Callbacks receive the simulation time of the crossing.
        self.on_depleted: list[Callable[[float], None]] = []
        self.on_recharged: list[Callable[[float], None]] = []

    # -- state exposed to the rest of the framework --------------------

    @property
    def capacity_j(self) -> float:
        raise NotImplementedError

    @property
    def residual_energy_j(self) -> float:
        """Residual energy as of the last update (call sync() for 'now')."""
        return self._energy_j

    @property
    def harvested_power_w(self) -> float:
        return self._harvest_power_w

    @property
    def total_consumed_j(self) -> float:
        return self._consumed.value

    @property
    def total_harvested_j(self) -> float:
        return self._harvested.value

    @property
    def clamp_loss_j(self) -> float:
        return self._clamp_loss.value

    def total_current_a(self) -> float:
        """Sum of the current draws of all attached devices (0 A when depleted)."""
        return sum(d.current_a for d in self._devices)

    def residual_fraction(self) -> float:
        self.sync()
        return self._fraction()

    def residual_energy(self) -> float:
        """Residual energy integrated through the current simulation time."""
        self.sync()
        return self._energy_j

    # -- wiring ---------------------------------------------------------

    def attach_device(self, device: "Device") -> None:
        device._attach(self)
        self._devices.append(device)

    @property
    def devices(self) -> tuple:
        return tuple(self._devices)

    def _attach_harvester(self, harvester) -> None:
        if self._harvester is not None:
            raise ValueError("a source accepts exactly one harvester")
        self._harvester = harvester

    def start(self) -> None:
        """Begin the periodic self-update chain (bounds depletion latency)."""
        self.sim.schedule(self.sim.now + self.update_interval_s, self._periodic_update)

    def _periodic_update(self) -> None:
        self.sync()
        self.sim.schedule(self.sim.now + self.update_interval_s, self._periodic_update)

    # -- integration core -------------------------------------------------

    def sync(self) -> None:
        """Integrate the span from the last update to the current clock.

        A source driven by direct integrate() calls may sit ahead of the
        kernel clock; syncing is then a no-op.
        """
        dt = self.sim.now - self._last_update
        if dt > 0:
            self.integrate(dt)

    def integrate(self, dt: float) -> None:
        """Advance the residual energy over a span of constant load and harvest.

        E' = clamp(E - V_eff*I_total*dt + P_h*dt, 0, capacity). Overflow above
        capacity accrues to clamp_loss_j; if the source empties mid-span the
        consumed ledger only counts the energy actually delivered, split over
        the devices pro rata, which keeps the conservation identity exact.
        """
        if dt < 0:
            raise NegativeDurationError(f"integration span must be >= 0, got {dt}")
        if dt == 0:
            return
        v_eff = self._effective_voltage()
        shares = [v_eff * d.current_a * dt for d in self._devices]
        draw = sum(shares)
        harvest = self._harvest_power_w * dt
        e_new = self._energy_j - draw + harvest

        cap = self.capacity_j
        if e_new > cap:
            self._clamp_loss.add(e_new - cap)
            e_new = cap
        elif e_new < 0.0:
            # draw > 0 here because harvest >= 0 and the old energy was >= 0.
            delivered = self._energy_j + harvest
            rescale = delivered / draw
            shares = [s * rescale for s in shares]
            draw = delivered
            e_new = 0.0

        for device, share in zip(self._devices, shares):
            device._consumed_j += share
        self._consumed.add(draw)
        self._harvested.add(harvest)
        self._energy_j = e_new
        self._last_update += dt
        self._check_thresholds()

    def notify_current_change(self, device: "Device", new_state: str) -> None:
        """Integrate at the old current up to now, then switch the device state."""
        if device not in self._devices:
            raise UnknownDeviceError(f"device {device.name!r} is not attached")
        self.sync()
        if not self.depleted:
            device._apply_state(new_state)

    def notify_harvest_change(self, new_power_w: float) -> None:
        """Integrate at the old harvested power up to now, then adopt the new one."""
        if new_power_w < 0:
            raise NegativePowerError(f"harvested power must be >= 0, got {new_power_w}")
        self.sync()
        self._harvest_power_w = new_power_w

    # -- depletion / recharge ---------------------------------------------

    def _check_thresholds(self) -> None:
        f = self._fraction()
        if not self.depleted and f <= self.low_threshold:
            self.depleted = True
            t = self._last_update
            log.info("source depleted at t=%g (fraction %.4f)", t, f)
            for device in self._devices:
                device._force_off()
            for cb in self.on_depleted:
                cb(t)
        elif self.depleted and f >= self.high_threshold:
            self.depleted = False
            t = self._last_update
            log.info("source recharged at t=%g (fraction %.4f)", t, f)
            for device in self._devices:
                device._resume()
            for cb in self.on_recharged:
                cb(t)

    # -- subclass hooks -----------------------------------------------------

    def _effective_voltage(self) -> float:
        raise NotImplementedError

    def _fraction(self) -> float:
        raise NotImplementedError


class BasicEnergySource(EnergySource):
    """Linear source: constant voltage, energy capped at the initial energy."""

    def __init__(self, sim: "Simulator", params: BasicSourceParams):
        super().__init__(sim, params.update_interval_s,
                         params.low_threshold, params.high_threshold,
                         params.initial_energy_j)
        self.params = params

    @property
    def capacity_j(self) -> float:
        return self.params.initial_energy_j

    @property
    def supply_voltage_v(self) -> float:
        return self.params.supply_voltage_v

    def _effective_voltage(self) -> float:
        return self.params.supply_voltage_v

    def _fraction(self) -> float:
        return self._energy_j / self.capacity_j


class SupercapacitorSource(EnergySource):
    """Supercapacitor: V = sqrt(2E/C), discharged at the span-start voltage.

    The stored energy is the source of truth; the voltage is derived on
    demand, so E = C*V^2/2 holds exactly at all times. Each update applies
    explicit Euler on the energy with the voltage frozen at the span start;
    the error shrinks linearly with update_interval_s.
    """

    def __init__(self, sim: "Simulator", params: SupercapParams):
        initial = 0.5 * params.capacitance_f * params.initial_voltage_v ** 2
        super().__init__(sim, params.update_interval_s,
                         params.low_threshold, params.high_threshold,
                         initial)
        self.params = params

    @property
    def capacity_j(self) -> float:
        p = self.params
        return 0.5 * p.capacitance_f * p.max_voltage_v ** 2

    @property
    def voltage_v(self) -> float:
        return math.sqrt(2.0 * self._energy_j / self.params.capacitance_f)

    def _effective_voltage(self) -> float:
        return self.voltage_v

    def _fraction(self) -> float:
        p = self.params
        v_sq = 2.0 * self._energy_j / p.capacitance_f
        usable = p.max_voltage_v ** 2 - p.cutoff_voltage_v ** 2
        f = (v_sq - p.cutoff_voltage_v ** 2) / usable
        return min(1.0, max(0.0, f))
