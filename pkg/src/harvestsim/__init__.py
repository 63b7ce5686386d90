"""harvestsim: deterministic discrete-event simulation of energy-harvesting nodes.

Energy sources (linear battery, supercapacitor) consume the current drawn by
state-machine device models, absorb piecewise-constant harvested power
(uniform-random or solar-trace replay), fire depletion/recharge events, and
feed a slot-based predictor of future harvested energy. Scenarios are YAML
configs run via the ``harvestsim`` CLI into deterministic CSV time series.
"""

from .devices import Device, DeviceStateTable, PeriodicSensor, SensorSchedule
from .harvesters import (
    BasicHarvester,
    BasicHarvesterParams,
    HarvestTrace,
    TraceHarvester,
)
from .kernel import RandomStream, Simulator
from .predictor import (
    EnergyPredictor,
    PredictorParams,
    ProfileStore,
    SlotProfile,
    predict_next,
)
from .scenario import (
    DeviceSpec,
    OutputRow,
    RunResult,
    Scenario,
    bundled_scenario_path,
    emit_csv,
    load_config,
    run_scenario,
)
from .sources import (
    BasicEnergySource,
    BasicSourceParams,
    SupercapacitorSource,
    SupercapParams,
)
from .tracefile import TraceInfo, load_trace, trace_info

__version__ = "0.1.0"

__all__ = [
    "BasicEnergySource",
    "BasicHarvester",
    "BasicHarvesterParams",
    "BasicSourceParams",
    "Device",
    "DeviceSpec",
    "DeviceStateTable",
    "EnergyPredictor",
    "HarvestTrace",
    "OutputRow",
    "PeriodicSensor",
    "PredictorParams",
    "ProfileStore",
    "RandomStream",
    "RunResult",
    "Scenario",
    "SensorSchedule",
    "Simulator",
    "SlotProfile",
    "SupercapParams",
    "SupercapacitorSource",
    "TraceHarvester",
    "TraceInfo",
    "bundled_scenario_path",
    "emit_csv",
    "load_config",
    "load_trace",
    "predict_next",
    "run_scenario",
    "trace_info",
]
