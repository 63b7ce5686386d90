"""Scenario configuration, simulation orchestration, and CSV emission.

A scenario is a YAML file binding one energy source, its devices, an
optional harvester, and an optional predictor into a runnable experiment.
Validation is strict: every unit-bearing field is range checked, unknown
keys are hard errors (they are almost always unit typos), and messages
carry the field path and the config line.

The runner emits one output row per sample interval plus one per
depletion/recharge event; (config bytes, seed) fully determine the output
bytes.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import IO, Any

import yaml

from .devices import Device, DeviceStateTable, PeriodicSensor, SensorSchedule
from .harvesters import BasicHarvester, BasicHarvesterParams, HarvestTrace, TraceHarvester
from .kernel import Simulator
from .predictor import EnergyPredictor, PredictorParams
from .sources import BasicEnergySource, BasicSourceParams, SupercapacitorSource, SupercapParams
from .tracefile import TraceParseError, load_trace

log = logging.getLogger(__name__)

CSV_HEADER = ("time_s,residual_energy_j,residual_fraction,harvested_power_w,"
              "total_current_a,predicted_energy_j,event")

BUNDLED_SCENARIOS = ("fig2", "fig3", "fig3_solar", "fig4")


class ConfigError(Exception):
    """Base class for scenario configuration problems."""


class ConfigParseError(ConfigError):
    """The config file is not well-formed YAML."""


class ConfigValidationError(ConfigError):
    """A config value is out of range, missing, unknown, or inconsistent."""

    def __init__(self, message: str, field_path: str | None = None):
        super().__init__(message)
        self.field_path = field_path


# ---------------------------------------------------------------------------
# Scenario model


@dataclass
class DeviceSpec:
    """One device of the scenario: its state table and optional sensing schedule."""

    name: str
    table: DeviceStateTable
    initial_state: str
    schedule: SensorSchedule | None = None
    active_state: str = "active"
    idle_state: str = "idle"


@dataclass
class Scenario:
    duration_s: float
    sample_interval_s: float
    source: BasicSourceParams | SupercapParams
    devices: list[DeviceSpec] = field(default_factory=list)
    harvester: BasicHarvesterParams | HarvestTrace | None = None
    predictor: PredictorParams | None = None
    master_seed: int = 0
    stop_on_depletion: bool = False
    name: str = "scenario"

    def __post_init__(self) -> None:
        if self.duration_s < 0:
            raise ValueError(f"duration_s must be >= 0, got {self.duration_s}")
        if self.sample_interval_s <= 0:
            raise ValueError(f"sample_interval_s must be > 0, got {self.sample_interval_s}")
        names = [d.name for d in self.devices]
        if len(set(names)) != len(names):
            raise ValueError(f"device names must be unique, got {names}")
        if self.predictor is not None and self.harvester is None:
            raise ValueError("a predictor requires a harvester")


@dataclass
class OutputRow:
    """One line of the run's CSV output."""

    time_s: float
    residual_energy_j: float
    residual_fraction: float
    harvested_power_w: float
    total_current_a: float
    predicted_energy_j: float | None
    event: str


@dataclass
class LedgerRow:
    """Cumulative energy ledger snapshot taken alongside each output row."""

    time_s: float
    residual_energy_j: float
    total_harvested_j: float
    clamp_loss_j: float
    total_consumed_j: float


@dataclass
class RunResult:
    rows: list[OutputRow]
    ledger: list[LedgerRow]
    capacity_j: float
    initial_energy_j: float

    @property
    def final_time_s(self) -> float:
        return self.rows[-1].time_s


# ---------------------------------------------------------------------------
# Config loading


def _line_map(text: str) -> dict[str, int]:
    """Map dotted field paths to 1-based config line numbers."""
    lines: dict[str, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node: Any, path: str) -> None:
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                child = f"{path}.{key_node.value}" if path else str(key_node.value)
                lines[child] = key_node.start_mark.line + 1
                walk(value_node, child)
        elif isinstance(node, yaml.SequenceNode):
            for index, item in enumerate(node.value):
                child = f"{path}[{index}]"
                lines[child] = item.start_mark.line + 1
                walk(item, child)

    if root is not None:
        walk(root, "")
    return lines


class _Validator:
    """Strict, path-aware extraction of typed values from the parsed YAML."""

    def __init__(self, config_path: Path, lines: dict[str, int]):
        self.config_path = config_path
        self.lines = lines

    def fail(self, path: str, message: str) -> "ConfigValidationError":
        line = self.lines.get(path)
        location = f"{self.config_path}:{line}" if line else str(self.config_path)
        return ConfigValidationError(f"{location}: {path}: {message}", field_path=path)

    def mapping(self, value: Any, path: str) -> dict:
        if not isinstance(value, dict):
            raise self.fail(path, f"expected a mapping, got {type(value).__name__}")
        return value

    def no_unknown_keys(self, data: dict, path: str, allowed: set[str]) -> None:
        for key in data:
            if key not in allowed:
                child = f"{path}.{key}" if path else str(key)
                raise self.fail(child, "unknown key (misspelled or wrong section?)")

    def get(self, data: dict, path: str, key: str, required: bool = False,
            default: Any = None) -> Any:
        if key in data:
            return data[key]
        if required:
            child = f"{path}.{key}" if path else key
            line = self.lines.get(path)
            location = f"{self.config_path}:{line}" if line else str(self.config_path)
            raise ConfigValidationError(f"{location}: {child}: missing required key",
                                        field_path=child)
        return default

    def number(self, data: dict, path: str, key: str, *, required: bool = False,
               default: float | None = None, ge: float | None = None,
               gt: float | None = None, le: float | None = None,
               lt: float | None = None) -> float | None:
        value = self.get(data, path, key, required, default)
        if value is None:
            return None
        child = f"{path}.{key}" if path else key
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise self.fail(child, f"expected a number, got {value!r}")
        try:
            number = float(value)
        except ValueError:
            raise self.fail(child, f"expected a number, got {value!r}") from None
        if not math.isfinite(number):
            raise self.fail(child, f"must be finite, got {number}")
        if ge is not None and not number >= ge:
            raise self.fail(child, f"must be >= {ge}, got {number}")
        if gt is not None and not number > gt:
            raise self.fail(child, f"must be > {gt}, got {number}")
        if le is not None and not number <= le:
            raise self.fail(child, f"must be <= {le}, got {number}")
        if lt is not None and not number < lt:
            raise self.fail(child, f"must be < {lt}, got {number}")
        return number

    def integer(self, data: dict, path: str, key: str, *, required: bool = False,
                default: int | None = None, ge: int | None = None,
                le: int | None = None) -> int | None:
        value = self.get(data, path, key, required, default)
        if value is None:
            return None
        child = f"{path}.{key}" if path else key
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(child, f"expected an integer, got {value!r}")
        if ge is not None and value < ge:
            raise self.fail(child, f"must be >= {ge}, got {value}")
        if le is not None and value > le:
            raise self.fail(child, f"must be <= {le}, got {value}")
        return value

    def boolean(self, data: dict, path: str, key: str, *, default: bool) -> bool:
        value = self.get(data, path, key, False, default)
        child = f"{path}.{key}" if path else key
        if not isinstance(value, bool):
            raise self.fail(child, f"expected true/false, got {value!r}")
        return value

    def string(self, data: dict, path: str, key: str, *, required: bool = False,
               default: str | None = None) -> str | None:
        value = self.get(data, path, key, required, default)
        if value is None:
            return None
        child = f"{path}.{key}" if path else key
        if not isinstance(value, str):
            raise self.fail(child, f"expected a string, got {value!r}")
        return value


def _build_source(v: _Validator, data: dict) -> BasicSourceParams | SupercapParams:
    source = v.mapping(data, "source")
    kind = v.string(source, "source", "kind", required=True)
    if kind == "basic":
        v.no_unknown_keys(source, "source", {
            "kind", "initial_energy_j", "supply_voltage_v", "update_interval_s",
            "low_threshold", "high_threshold"})
        params = dict(
            initial_energy_j=v.number(source, "source", "initial_energy_j",
                                      required=True, gt=0),
            supply_voltage_v=v.number(source, "source", "supply_voltage_v",
                                      required=True, gt=0),
            update_interval_s=v.number(source, "source", "update_interval_s",
                                       required=True, gt=0),
            low_threshold=v.number(source, "source", "low_threshold",
                                   default=0.10, ge=0, lt=1),
            high_threshold=v.number(source, "source", "high_threshold",
                                    default=0.15, gt=0, le=1),
        )
        cls = BasicSourceParams
    elif kind == "supercapacitor":
        v.no_unknown_keys(source, "source", {
            "kind", "capacitance_f", "initial_voltage_v", "max_voltage_v",
            "cutoff_voltage_v", "update_interval_s", "low_threshold",
            "high_threshold"})
        params = dict(
            capacitance_f=v.number(source, "source", "capacitance_f",
                                   required=True, gt=0),
            initial_voltage_v=v.number(source, "source", "initial_voltage_v",
                                       required=True, gt=0),
            max_voltage_v=v.number(source, "source", "max_voltage_v",
                                   required=True, gt=0),
            cutoff_voltage_v=v.number(source, "source", "cutoff_voltage_v",
                                      required=True, ge=0),
            update_interval_s=v.number(source, "source", "update_interval_s",
                                       required=True, gt=0),
            low_threshold=v.number(source, "source", "low_threshold",
                                   default=0.10, ge=0, lt=1),
            high_threshold=v.number(source, "source", "high_threshold",
                                    default=0.15, gt=0, le=1),
        )
        cls = SupercapParams
    else:
        raise v.fail("source.kind", f"must be 'basic' or 'supercapacitor', got {kind!r}")
    try:
        return cls(**params)
    except ValueError as exc:
        raise v.fail("source", str(exc)) from None


def _nominal_voltage(source: BasicSourceParams | SupercapParams) -> float:
    if isinstance(source, BasicSourceParams):
        return source.supply_voltage_v
    return source.initial_voltage_v


def _build_device(v: _Validator, item: Any, path: str, nominal_voltage_v: float) -> DeviceSpec:
    device = v.mapping(item, path)
    v.no_unknown_keys(device, path, {"name", "states", "initial_state", "schedule"})
    name = v.string(device, path, "name", required=True)
    states_map = v.mapping(v.get(device, path, "states", True, None), f"{path}.states")
    if not states_map:
        raise v.fail(f"{path}.states", "at least one state is required")
    currents: dict[str, float] = {}
    for state_name, spec in states_map.items():
        state_path = f"{path}.states.{state_name}"
        spec = v.mapping(spec, state_path)
        v.no_unknown_keys(spec, state_path, {"current_a", "power_w"})
        has_current = "current_a" in spec
        has_power = "power_w" in spec
        if has_current == has_power:
            raise v.fail(state_path, "give exactly one of current_a or power_w")
        if has_current:
            currents[state_name] = v.number(spec, state_path, "current_a",
                                            required=True, ge=0)
        else:
            power = v.number(spec, state_path, "power_w", required=True, ge=0)
            currents[state_name] = power / nominal_voltage_v
    try:
        table = DeviceStateTable(currents)
    except ValueError as exc:
        raise v.fail(f"{path}.states", str(exc)) from None
    initial_state = v.string(device, path, "initial_state", default="idle")
    if initial_state not in table:
        raise v.fail(f"{path}.initial_state",
                     f"state {initial_state!r} is not declared in states")

    schedule = None
    active_state = "active"
    idle_state = "idle"
    if "schedule" in device:
        sched_path = f"{path}.schedule"
        sched = v.mapping(device["schedule"], sched_path)
        v.no_unknown_keys(sched, sched_path, {
            "period_s", "active_duration_s", "start_offset_s",
            "active_state", "idle_state"})
        period = v.number(sched, sched_path, "period_s", required=True, gt=0)
        active_duration = v.number(sched, sched_path, "active_duration_s",
                                   required=True, gt=0)
        offset = v.number(sched, sched_path, "start_offset_s", default=0.0, ge=0)
        if active_duration >= period:
            raise v.fail(f"{sched_path}.active_duration_s",
                         f"must be smaller than period_s={period}, got {active_duration}")
        active_state = v.string(sched, sched_path, "active_state", default="active")
        idle_state = v.string(sched, sched_path, "idle_state", default="idle")
        for ref in (active_state, idle_state):
            if ref not in table:
                raise v.fail(sched_path, f"schedule references unknown state {ref!r}")
        schedule = SensorSchedule(period_s=period, active_duration_s=active_duration,
                                  start_offset_s=offset)
    return DeviceSpec(name=name, table=table, initial_state=initial_state,
                      schedule=schedule, active_state=active_state,
                      idle_state=idle_state)


def _build_harvester(v: _Validator, data: dict,
                     base_dir: Path) -> BasicHarvesterParams | HarvestTrace:
    harvester = v.mapping(data, "harvester")
    kind = v.string(harvester, "harvester", "kind", required=True)
    if kind == "basic":
        v.no_unknown_keys(harvester, "harvester",
                          {"kind", "h_max_w", "update_period_s", "stream_tag"})
        try:
            return BasicHarvesterParams(
                h_max_w=v.number(harvester, "harvester", "h_max_w", required=True, ge=0),
                update_period_s=v.number(harvester, "harvester", "update_period_s",
                                         required=True, gt=0),
                stream_tag=v.string(harvester, "harvester", "stream_tag",
                                    default="harvester"),
            )
        except ValueError as exc:
            raise v.fail("harvester", str(exc)) from None
    if kind == "trace":
        v.no_unknown_keys(harvester, "harvester", {"kind", "file", "wrap", "scale"})
        file_name = v.string(harvester, "harvester", "file", required=True)
        wrap = v.boolean(harvester, "harvester", "wrap", default=False)
        scale = v.number(harvester, "harvester", "scale", default=1.0, ge=0)
        trace_path = Path(file_name)
        if not trace_path.is_absolute():
            trace_path = base_dir / trace_path
        try:
            return load_trace(trace_path, wrap=wrap, scale=scale)
        except OSError as exc:
            raise TraceParseError(f"{trace_path}: cannot read trace: {exc}") from exc
    raise v.fail("harvester.kind", f"must be 'basic' or 'trace', got {kind!r}")


def _build_predictor(v: _Validator, data: dict) -> PredictorParams:
    predictor = v.mapping(data, "predictor")
    v.no_unknown_keys(predictor, "predictor", {
        "alpha", "slot_duration_s", "slots_per_day", "store_capacity_days",
        "similarity_window_k", "stream_tag"})
    params = dict(
        alpha=v.number(predictor, "predictor", "alpha", required=True, ge=0, le=1),
        slot_duration_s=v.number(predictor, "predictor", "slot_duration_s",
                                 required=True, gt=0),
        slots_per_day=v.integer(predictor, "predictor", "slots_per_day",
                                required=True, ge=1),
        store_capacity_days=v.integer(predictor, "predictor", "store_capacity_days",
                                      default=7, ge=1),
        similarity_window_k=v.integer(predictor, "predictor", "similarity_window_k",
                                      default=4, ge=1),
        stream_tag=v.string(predictor, "predictor", "stream_tag", default="predictor"),
    )
    try:
        return PredictorParams(**params)
    except ValueError as exc:
        raise v.fail("predictor", str(exc)) from None


def load_config(path: str | Path) -> Scenario:
    """Parse and fully validate a scenario config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"{path}: cannot read config: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigParseError(f"{where}: malformed YAML: {exc}") from exc

    v = _Validator(path, _line_map(text))
    data = v.mapping(data, "")
    v.no_unknown_keys(data, "", {
        "name", "description", "duration_s", "master_seed", "sample_interval_s",
        "stop_on_depletion", "source", "devices", "harvester", "predictor"})

    name = v.string(data, "", "name", default=path.stem)
    v.string(data, "", "description", default=None)
    duration_s = v.number(data, "", "duration_s", required=True, ge=0)
    master_seed = v.integer(data, "", "master_seed", default=0, ge=0, le=2**64 - 1)
    sample_interval_s = v.number(data, "", "sample_interval_s", required=True, gt=0)
    stop_on_depletion = v.boolean(data, "", "stop_on_depletion", default=False)

    if "source" not in data:
        raise ConfigValidationError(f"{path}: source: missing required section",
                                    field_path="source")
    source = _build_source(v, data["source"])

    devices: list[DeviceSpec] = []
    if "devices" in data:
        items = data["devices"]
        if not isinstance(items, list):
            raise v.fail("devices", f"expected a list, got {type(items).__name__}")
        nominal = _nominal_voltage(source)
        for index, item in enumerate(items):
            devices.append(_build_device(v, item, f"devices[{index}]", nominal))
        names = [d.name for d in devices]
        if len(set(names)) != len(names):
            raise v.fail("devices", f"device names must be unique, got {names}")

    harvester = None
    if "harvester" in data:
        harvester = _build_harvester(v, data["harvester"], path.parent)

    predictor = None
    if "predictor" in data:
        if harvester is None:
            raise v.fail("predictor", "a predictor requires a harvester")
        predictor = _build_predictor(v, data["predictor"])

    scenario = Scenario(
        duration_s=duration_s,
        sample_interval_s=sample_interval_s,
        source=source,
        devices=devices,
        harvester=harvester,
        predictor=predictor,
        master_seed=master_seed,
        stop_on_depletion=stop_on_depletion,
        name=name,
    )
    log.debug("loaded scenario %r from %s", scenario.name, path)
    return scenario


# ---------------------------------------------------------------------------
# Running


class _Runner:
    """Builds the component graph for one scenario and collects output rows."""

    def __init__(self, scenario: Scenario, seed: int):
        self.scenario = scenario
        self.sim = Simulator(seed)
        self.rows: list[OutputRow] = []
        self.ledger: list[LedgerRow] = []
        self._pending_markers: list[str] = []

        if isinstance(scenario.source, BasicSourceParams):
            self.source = BasicEnergySource(self.sim, scenario.source)
        else:
            self.source = SupercapacitorSource(self.sim, scenario.source)

        self.sensors: list[PeriodicSensor] = []
        for spec in scenario.devices:
            device = Device(spec.name, spec.table, spec.initial_state)
            self.source.attach_device(device)
            if spec.schedule is not None:
                self.sensors.append(PeriodicSensor(
                    self.sim, device, spec.schedule,
                    active_state=spec.active_state, idle_state=spec.idle_state))

        self.harvester = None
        if isinstance(scenario.harvester, BasicHarvesterParams):
            self.harvester = BasicHarvester(self.sim, scenario.harvester)
        elif isinstance(scenario.harvester, HarvestTrace):
            self.harvester = TraceHarvester(self.sim, scenario.harvester)
        if self.harvester is not None:
            self.harvester.attach(self.source)

        self.predictor = None
        if scenario.predictor is not None:
            assert self.harvester is not None
            self.predictor = EnergyPredictor(self.sim, scenario.predictor, self.harvester)

    def run(self) -> RunResult:
        scenario = self.scenario
        # Components start before the sampler so that, at coincident event
        # times, rows see the updated harvest/prediction state.
        self.source.start()
        if self.harvester is not None:
            self.harvester.start()
        for sensor in self.sensors:
            sensor.start()
        if self.predictor is not None:
            self.predictor.start()
            self.predictor.on_slot.append(self._on_slot)
        self.source.on_depleted.append(self._on_depleted)
        self.source.on_recharged.append(self._on_recharged)
        self.sim.schedule(0.0, self._sample)

        self.sim.run_until(scenario.duration_s)
        return RunResult(rows=self.rows, ledger=self.ledger,
                         capacity_j=self.source.capacity_j,
                         initial_energy_j=self.source.initial_energy_j)

    # -- event hooks --------------------------------------------------------

    def _on_depleted(self, t: float) -> None:
        self._emit(t, "depleted")
        if self.scenario.stop_on_depletion:
            log.info("stopping at first depletion (t=%g)", t)
            self.sim.stop()

    def _on_recharged(self, t: float) -> None:
        self._emit(t, "recharged")

    def _on_slot(self, t: float, c_t: float, prediction: float, cold: bool) -> None:
        if cold:
            self._pending_markers.append("cold_start")

    def _sample(self) -> None:
        now = self.sim.now
        self._emit(now)
        if now >= self.scenario.duration_s:
            return
        next_at = min(now + self.scenario.sample_interval_s, self.scenario.duration_s)
        self.sim.schedule(next_at, self._sample)

    # -- row assembly ---------------------------------------------------------

    def _emit(self, t: float, marker: str | None = None) -> None:
        self.source.sync()
        markers = list(self._pending_markers)
        self._pending_markers.clear()
        if marker is not None:
            markers.append(marker)
        predicted = self.predictor.latest_prediction_j if self.predictor else None
        if self.rows and self.rows[-1].time_s == t:
            # Same-instant update: merge instead of emitting a duplicate time.
            markers = _merge_markers(self.rows[-1].event, markers)
            self.rows.pop()
            self.ledger.pop()
        row = OutputRow(
            time_s=t,
            residual_energy_j=self.source.residual_energy_j,
            residual_fraction=self.source.residual_fraction(),
            harvested_power_w=self.source.harvested_power_w,
            total_current_a=self.source.total_current_a(),
            predicted_energy_j=predicted,
            event=";".join(markers),
        )
        self.rows.append(row)
        self.ledger.append(LedgerRow(
            time_s=t,
            residual_energy_j=self.source.residual_energy_j,
            total_harvested_j=self.source.total_harvested_j,
            clamp_loss_j=self.source.clamp_loss_j,
            total_consumed_j=self.source.total_consumed_j,
        ))


def _merge_markers(existing: str, new: list[str]) -> list[str]:
    merged = [m for m in existing.split(";") if m]
    for m in new:
        if m not in merged:
            merged.append(m)
    return merged


def run_scenario(scenario: Scenario, seed_override: int | None = None) -> RunResult:
    """Run one scenario to completion and return its output rows and ledger."""
    seed = scenario.master_seed if seed_override is None else seed_override
    runner = _Runner(scenario, seed)
    result = runner.run()
    log.info("scenario %r finished at t=%g with %d rows",
             scenario.name, result.final_time_s, len(result.rows))
    return result


# ---------------------------------------------------------------------------
# CSV emission


def _fmt(value: float) -> str:
    return repr(float(value))


def format_rows(rows: list[OutputRow]):
    """Yield CSV lines (without newlines) for the given rows."""
    yield CSV_HEADER
    for row in rows:
        predicted = "" if row.predicted_energy_j is None else _fmt(row.predicted_energy_j)
        yield ",".join((
            _fmt(row.time_s),
            _fmt(row.residual_energy_j),
            _fmt(row.residual_fraction),
            _fmt(row.harvested_power_w),
            _fmt(row.total_current_a),
            predicted,
            row.event,
        ))


def emit_csv(rows: list[OutputRow], destination: str | Path | IO[str]) -> None:
    """Write rows as CSV with LF line endings to a path or text stream."""
    if hasattr(destination, "write"):
        for line in format_rows(rows):
            destination.write(line + "\n")
        return
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        for line in format_rows(rows):
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# Bundled scenarios


def data_dir() -> Path:
    """Directory holding the bundled scenario configs and the solar trace."""
    return Path(os.fspath(resources.files("harvestsim") / "data"))


def bundled_scenario_path(name: str) -> Path:
    """Path of a bundled scenario config by short name (e.g. 'fig2')."""
    if name not in BUNDLED_SCENARIOS:
        raise KeyError(f"unknown bundled scenario {name!r}; "
                       f"available: {', '.join(BUNDLED_SCENARIOS)}")
    return data_dir() / f"{name}.yaml"
