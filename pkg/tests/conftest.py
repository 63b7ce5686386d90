import pytest

from harvestsim.devices import Device, DeviceStateTable
from harvestsim.kernel import Simulator
from harvestsim.sources import BasicEnergySource, BasicSourceParams


def make_basic_source(sim: Simulator, initial_energy_j: float = 1.0,
                      supply_voltage_v: float = 3.0,
                      update_interval_s: float = 60.0,
                      low_threshold: float = 0.10,
                      high_threshold: float = 0.15) -> BasicEnergySource:
    params = BasicSourceParams(
        initial_energy_j=initial_energy_j,
        supply_voltage_v=supply_voltage_v,
        update_interval_s=update_interval_s,
        low_threshold=low_threshold,
        high_threshold=high_threshold,
    )
    return BasicEnergySource(sim, params)


def make_device(source, currents_a: dict[str, float], initial_state: str,
                name: str = "dev") -> Device:
    device = Device(name, DeviceStateTable(currents_a), initial_state)
    source.attach_device(device)
    return device


@pytest.fixture
def sim() -> Simulator:
    return Simulator(master_seed=42)
