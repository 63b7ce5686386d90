"""Profile store, day selection, and the weighted next-slot prediction."""

import random

import pytest

from harvestsim.harvesters import HarvestTrace, TraceHarvester
from harvestsim.kernel import Simulator
from harvestsim.predictor import (
    EmptyStoreError,
    EnergyPredictor,
    NegativeEnergyError,
    PredictorParams,
    ProfileStore,
    predict_next,
)

from conftest import make_basic_source


def params(alpha=0.5, slots_per_day=4, capacity=7, k=2):
    return PredictorParams(alpha=alpha, slot_duration_s=86400.0 / slots_per_day,
                           slots_per_day=slots_per_day,
                           store_capacity_days=capacity, similarity_window_k=k)


def fill_day(store, energies):
    for e in energies:
        store.record_slot(e)


# -- parameter validation -------------------------------------------------------

def test_alpha_out_of_range_rejected():
    with pytest.raises(ValueError):
        params(alpha=1.5)
    with pytest.raises(ValueError):
        params(alpha=-0.1)


def test_slot_grid_must_cover_one_day():
    with pytest.raises(ValueError):
        PredictorParams(alpha=0.5, slot_duration_s=3600.0, slots_per_day=23)


def test_window_bounded_by_slots_per_day():
    with pytest.raises(ValueError):
        params(slots_per_day=4, k=5)


# -- predict_next ------------------------------------------------------------------

def test_alpha_one_returns_current_slot_exactly():
    p = params(alpha=1.0)
    assert predict_next(p, 2.34, 9.99) == 2.34


def test_alpha_zero_returns_stored_slot_exactly():
    p = params(alpha=0.0)
    assert predict_next(p, 2.34, 9.99) == 9.99


def test_weighted_blend_hand_value():
    p = params(alpha=0.5)
    assert predict_next(p, 2.0, 4.0) == pytest.approx(3.0, rel=1e-15)


def test_prediction_bounded_and_affine_in_alpha():
    rng = random.Random(3)
    grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    for _ in range(2000):
        c = rng.uniform(0.0, 4.0)
        e = rng.uniform(0.0, 4.0)
        values = [predict_next(params(alpha=a), c, e) for a in grid]
        for value in values:
            assert min(c, e) - 1e-15 <= value <= max(c, e) + 1e-15
        for a1, a2, v1, v2 in zip(grid, grid[1:], values, values[1:]):
            slope = (v2 - v1) / (a2 - a1)
            assert abs(slope - (c - e)) <= 1e-12


# -- record_slot / store ---------------------------------------------------------------

def test_day_commits_and_resets():
    store = ProfileStore(params())
    fill_day(store, [1.0, 2.0, 3.0, 4.0])
    assert len(store.stored_days) == 1
    assert store.stored_days[0].complete
    assert store.stored_days[0].slot_energies_j == [1.0, 2.0, 3.0, 4.0]
    assert store.current_slot_index == 0


def test_store_evicts_oldest_at_capacity():
    store = ProfileStore(params(capacity=2))
    fill_day(store, [1.0] * 4)
    fill_day(store, [2.0] * 4)
    fill_day(store, [3.0] * 4)
    assert len(store.stored_days) == 2
    assert [d.slot_energies_j[0] for d in store.stored_days] == [2.0, 3.0]


def test_negative_energy_rejected():
    with pytest.raises(NegativeEnergyError):
        ProfileStore(params()).record_slot(-1.0)


def test_zero_day_propagates_zero_predictions():
    store = ProfileStore(params(alpha=0.0))
    fill_day(store, [0.0] * 4)
    store.record_slot(5.0)  # today's observation is ignored when alpha=0
    assert store.predict_horizon(1) == [0.0]


# -- select_profile -------------------------------------------------------------------

def test_single_stored_day_is_always_selected():
    store = ProfileStore(params())
    fill_day(store, [9.0, 9.0, 9.0, 9.0])
    store.record_slot(0.0)
    assert store.select_profile() == 0


def test_selection_minimizes_mae():
    store = ProfileStore(params(k=2))
    fill_day(store, [1.0, 1.0, 1.0, 1.0])  # day A
    fill_day(store, [5.0, 5.0, 5.0, 5.0])  # day B
    store.record_slot(1.1)
    store.record_slot(0.9)
    assert store.select_profile() == 0  # A matches today's ~1 J slots


def test_ties_break_toward_most_recent_day():
    store = ProfileStore(params())
    fill_day(store, [2.0, 2.0, 2.0, 2.0])
    fill_day(store, [2.0, 2.0, 2.0, 2.0])
    store.record_slot(2.0)
    assert store.select_profile() == 1


def test_selection_unchanged_by_appending_strictly_worse_days():
    store = ProfileStore(params(capacity=7, k=2))
    fill_day(store, [1.0, 1.0, 1.0, 1.0])
    store.record_slot(1.0)
    chosen = store.select_profile()
    before = store.stored_days[chosen]
    # A day that is strictly worse in MAE cannot steal the selection.
    observed = store.current_day.slot_energies_j[:]
    store.stored_days.append(
        type(before)(slot_energies_j=[50.0, 50.0, 50.0, 50.0], complete=True))
    assert store.stored_days[store.select_profile()] is before
    assert store.current_day.slot_energies_j == observed


def test_empty_store_raises():
    store = ProfileStore(params())
    store.record_slot(1.0)
    with pytest.raises(EmptyStoreError):
        store.select_profile()
    with pytest.raises(EmptyStoreError):
        store.predict_horizon(1)


def test_selection_at_fresh_day_boundary_uses_previous_tail():
    # Exactly at midnight nothing has been observed today; the trailing
    # window comes from the just-committed day, which then matches itself.
    store = ProfileStore(params(k=2))
    fill_day(store, [1.0, 2.0, 3.0, 4.0])
    fill_day(store, [9.0, 9.0, 9.0, 9.0])
    assert store.current_slot_index == 0
    assert store.select_profile() == 1


# -- predict_horizon -------------------------------------------------------------------

def test_horizon_one_equals_predict_next():
    store = ProfileStore(params(alpha=0.5))
    fill_day(store, [1.0, 2.0, 3.0, 4.0])
    store.record_slot(2.0)
    expected = predict_next(params(alpha=0.5), 2.0, 2.0)  # next stored slot is 2.0
    assert store.predict_horizon(1) == [expected]


def test_alpha_zero_horizon_returns_stored_slots_verbatim():
    store = ProfileStore(params(alpha=0.0))
    fill_day(store, [1.0, 2.0, 3.0, 4.0])
    store.record_slot(7.0)
    # Next slots of the stored day starting at index 1, wrapping past midnight.
    assert store.predict_horizon(5) == [2.0, 3.0, 4.0, 1.0, 2.0]


def test_alpha_one_horizon_feeds_prediction_back():
    store = ProfileStore(params(alpha=1.0))
    fill_day(store, [1.0, 2.0, 3.0, 4.0])
    store.record_slot(7.0)
    assert store.predict_horizon(4) == [7.0, 7.0, 7.0, 7.0]


def test_homogeneity_under_power_of_two_scaling():
    # Scaling all energies by a power of two scales predictions exactly.
    def build(scale):
        store = ProfileStore(params(alpha=0.75, k=2))
        fill_day(store, [scale * e for e in (1.0, 2.0, 3.0, 4.0)])
        fill_day(store, [scale * e for e in (1.5, 2.5, 3.5, 0.5)])
        store.record_slot(scale * 1.25)
        return store

    base = build(1.0).predict_horizon(6)
    for scale in (0.5, 2.0, 8.0):
        scaled = build(scale).predict_horizon(6)
        assert scaled == [scale * v for v in base]


# -- EnergyPredictor over a running simulation ---------------------------------------

def test_predictor_records_slot_integrals_and_flags_cold_start():
    sim = Simulator(master_seed=0)
    source = make_basic_source(sim, initial_energy_j=1000.0,
                               update_interval_s=21600.0)
    # Two-level day: 2 W in the first half, 0 W in the second.
    trace = HarvestTrace(samples=[(0.0, 2.0), (43200.0, 0.0)],
                         wrap=True, duration_s=86400.0)
    harvester = TraceHarvester(sim, trace)
    harvester.attach(source)
    p = PredictorParams(alpha=0.5, slot_duration_s=21600.0, slots_per_day=4,
                        store_capacity_days=3, similarity_window_k=2)
    predictor = EnergyPredictor(sim, p, harvester)
    slots = []
    predictor.on_slot.append(lambda t, c, pred, cold: slots.append((t, c, pred, cold)))

    harvester.start()
    predictor.start()
    sim.run_until(2 * 86400.0)

    assert len(slots) == 8
    per_slot = 2.0 * 21600.0  # 2 W over a 6 h slot
    assert [c for _, c, _, _ in slots] == [per_slot, per_slot, 0.0, 0.0] * 2
    # Day one is cold (store empty until the 4th slot commits the day).
    assert [cold for *_, cold in slots] == [True, True, True, False,
                                            False, False, False, False]
    # Cold-start predictions fall back to the observed slot energy.
    for _, c, pred, cold in slots[:3]:
        assert pred == c
    # From day two the stored profile matches the repeating trace exactly.
    t5 = slots[4]
    assert t5[2] == pytest.approx(0.5 * per_slot + 0.5 * per_slot, rel=1e-12)
