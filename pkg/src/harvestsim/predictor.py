"""Next-slot harvest prediction from stored day profiles.

The day is divided into fixed slots; each finished slot's harvested energy
is recorded into the current day's profile, and completed days are stored
(FIFO, bounded). The forecast blends the freshest observation with the
matching slot of a similar stored day:

    prediction = alpha * C_t + (1 - alpha) * E_d(t+1)

where C_t is the energy harvested in the slot that just ended and E_d(t+1)
is the energy of the next slot in the selected stored day.
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

if TYPE_CHECKING:
    from .harvesters import _HarvesterBase
    from .kernel import Simulator

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0


class NegativeEnergyError(ValueError):
    """Recorded slot energy must be non-negative."""


class EmptyStoreError(RuntimeError):
    """Profile selection requested before any day completed."""


@dataclass
class PredictorParams:
    alpha: float
    slot_duration_s: float
    slots_per_day: int
    store_capacity_days: int = 7
    similarity_window_k: int = 4
    stream_tag: str = "predictor"

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.slot_duration_s <= 0:
            raise ValueError(f"slot_duration_s must be > 0, got {self.slot_duration_s}")
        if self.slots_per_day < 1:
            raise ValueError(f"slots_per_day must be >= 1, got {self.slots_per_day}")
        if abs(self.slot_duration_s * self.slots_per_day - SECONDS_PER_DAY) > 1e-6:
            raise ValueError(
                "slot_duration_s * slots_per_day must equal one day (86400 s), got "
                f"{self.slot_duration_s * self.slots_per_day}"
            )
        if self.store_capacity_days < 1:
            raise ValueError(
                f"store_capacity_days must be >= 1, got {self.store_capacity_days}"
            )
        if not 1 <= self.similarity_window_k <= self.slots_per_day:
            raise ValueError(
                "similarity_window_k must lie in [1, slots_per_day], got "
                f"{self.similarity_window_k}"
            )


@dataclass
class SlotProfile:
    """One day's worth of per-slot harvested energies."""

    slot_energies_j: list[float] = field(default_factory=list)
    complete: bool = False


def predict_next(params: PredictorParams, c_t: float, e_d_next: float) -> float:
    """The weighted blend alpha*C_t + (1-alpha)*E_d(t+1)."""
    return params.alpha * c_t + (1.0 - params.alpha) * e_d_next


class ProfileStore:
    """Stored complete day profiles plus the partially observed current day."""

    def __init__(self, params: PredictorParams):
        self.params = params
        self.stored_days: list[SlotProfile] = []
        self.current_day = SlotProfile()

    @property
    def current_slot_index(self) -> int:
        return len(self.current_day.slot_energies_j)

    def record_slot(self, slot_energy_j: float) -> None:
        """Append the finished slot's energy; commit the day when it completes."""
        if slot_energy_j < 0:
            raise NegativeEnergyError(f"slot energy must be >= 0, got {slot_energy_j}")
        self.current_day.slot_energies_j.append(slot_energy_j)
        if len(self.current_day.slot_energies_j) == self.params.slots_per_day:
            self.current_day.complete = True
            self.stored_days.append(self.current_day)
            if len(self.stored_days) > self.params.store_capacity_days:
                self.stored_days.pop(0)  # FIFO eviction of the oldest day
            self.current_day = SlotProfile()

    def _similarity_window(self) -> tuple[int, list[float]]:
        """Slot index of the window start and the observed energies to match.

        Uses the trailing min(K, observed-today) slots of the current day; at
        a fresh day boundary (nothing observed yet today) it falls back to
        the trailing K slots of the most recently stored day, which were the
        last observations before midnight.
        """
        k = self.params.similarity_window_k
        today = self.current_day.slot_energies_j
        if today:
            w = min(k, len(today))
            return len(today) - w, today[-w:]
        last = self.stored_days[-1].slot_energies_j
        w = min(k, len(last))
        return len(last) - w, last[-w:]

    def select_profile(self) -> int:
        """Index of the stored day with minimal MAE against the recent window.

        Ties break toward the most recently stored day.
        """
        if not self.stored_days:
            raise EmptyStoreError("no complete day profiles stored yet")
        start, window = self._similarity_window()
        best_index = 0
        best_mae = None
        for index, day in enumerate(self.stored_days):
            segment = day.slot_energies_j[start:start + len(window)]
            mae = sum(abs(a - b) for a, b in zip(segment, window)) / len(window)
            if best_mae is None or mae <= best_mae:
                best_mae = mae
                best_index = index
        return best_index

    def predict_horizon(self, horizon_slots: int) -> list[float]:
        """Predictions for the next ``horizon_slots`` slots.

        The first slot uses the observed C_t; further slots feed the previous
        prediction back in as C. Stored-day indices wrap past midnight.
        """
        if horizon_slots < 1:
            raise ValueError(f"horizon_slots must be >= 1, got {horizon_slots}")
        day = self.stored_days[self.select_profile()]
        spd = self.params.slots_per_day
        today = self.current_day.slot_energies_j
        if today:
            c = today[-1]
        else:
            c = self.stored_days[-1].slot_energies_j[-1]
        next_index = len(today)
        out = []
        for k in range(horizon_slots):
            e_d = day.slot_energies_j[(next_index + k) % spd]
            c = predict_next(self.params, c, e_d)
            out.append(c)
        return out


class EnergyPredictor:
    """Slot-boundary driver: records harvested energy and forecasts the next slot.

    With an empty store the forecast falls back to the observed C_t and the
    slot is flagged as a cold start. The predictor draws nothing from its
    random stream today, but registers its own tag so that plugging it in
    (or renaming it) can never perturb another component's samples.
    """

    def __init__(self, sim: "Simulator", params: PredictorParams,
                 harvester: "_HarvesterBase"):
        self.sim = sim
        self.params = params
        self.harvester = harvester
        self.store = ProfileStore(params)
        self._stream = sim.stream(params.stream_tag)
        self.latest_prediction_j: float | None = None
        # Callbacks receive (time, c_t, prediction, cold_start).
        self.on_slot: list[Callable[[float, float, float, bool], None]] = []
        self._start_time = 0.0
        self._boundaries = 0

    def start(self) -> None:
        self._start_time = self.sim.now
        self.sim.schedule(self._start_time + self.params.slot_duration_s,
                          self._on_boundary)

    def _on_boundary(self) -> None:
        t = self.sim.now
        c_t = self.harvester.slot_energy(t - self.params.slot_duration_s, t)
        self.store.record_slot(c_t)
        cold_start = not self.store.stored_days
        if cold_start:
            prediction = c_t
        else:
            prediction = self.store.predict_horizon(1)[0]
        self.latest_prediction_j = prediction
        log.debug("slot ended at t=%g: c_t=%g J, prediction=%g J%s",
                  t, c_t, prediction, " (cold start)" if cold_start else "")
        for cb in self.on_slot:
            cb(t, c_t, prediction, cold_start)
        self._boundaries += 1
        next_at = self._start_time + (self._boundaries + 1) * self.params.slot_duration_s
        self.sim.schedule(next_at, self._on_boundary)
