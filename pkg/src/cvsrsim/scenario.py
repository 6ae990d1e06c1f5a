"""Scenario configuration: a small YAML schema mapping onto the device,
circuit, and solver parameters, plus the built-in study suites.

An empty document is a valid scenario and reproduces the reference
device at 60 Hz, dt = period/2000, 10 cycles, zero bias, no fault.
The full grammar (all keys optional):

    schema_version: 1
    name: my-case
    device:
      middle_leg_length_m: 0.4572
      outer_leg_length_m: 0.8636
      cross_section_area_m2: 0.0103
      middle_area_factor: 2.0
      air_gap_length_m: 0.002014
      fringing: true
      ac_turns: 300
      dc_turns: 450
      material:
        b_sat_T: 1.34
        mu_r_init: 2500.0
        knee_sharpness: 3.0
        saturation_overshoot: 1.05
        curve_csv: null          # path to a measured h_A_per_m,b_tesla table
    source:
      v_rms_V: 2400.0
      frequency_Hz: 60.0
      phase_rad: auto            # number, or "auto" for transient-free start
    load:
      resistance_ohm: 100.0
      inductance_H: 0.13
    dc_bias_A: 0.0
    dc_source:
      mode: voltage              # voltage-behind-resistance, or "current"
      resistance_ohm: 0.05       # dc source internal resistance (voltage mode)
    fault:
      enabled: false
      t_fault_s: null            # default when enabled: 2 fundamental periods
      retained_fraction: 0.1
    solver:
      dt_s: null                 # default: period / 2000
      t_end_s: null              # default: 10 periods
      method: trapezoidal        # or backward-euler
      newton_tol: 3.0e-9
      newton_max_iter: 50
      startup: dc-preset         # or cold
    outputs:
      channels: all              # or explicit channel list
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import yaml

from .circuits import AcSource, DcBias, FaultSpec, SeriesLoad
from .magnetics import CvsrParams, ValidationError, build_cvsr
from .material import MaterialCurve, load_curve_csv
from .solver import CvsrSystem, SolverConfig, auto_phase

SCHEMA_VERSION = 1

ALL_CHANNELS = ("t", "v_source", "i_ac", "i_dc", "flux_left", "flux_right",
                "flux_middle", "b_left", "b_right", "b_middle",
                "v_ac_winding", "e_dc", "p_dc_inst")

SAMPLES_PER_CYCLE = 2000
DEFAULT_CYCLES = 10
FAULT_DELAY_CYCLES = 2


class ScenarioError(ValueError):
    """Malformed or out-of-range scenario document."""


@dataclass(frozen=True)
class Scenario:
    """A fully validated simulation case."""

    name: str = "default"
    device: CvsrParams = field(default_factory=CvsrParams)
    v_rms: float = 2400.0
    frequency: float = 60.0
    phase: float | str = "auto"
    resistance: float = 100.0
    inductance: float = 0.13
    dc_bias: float = 0.0
    dc_mode: str = "voltage"
    dc_resistance: float = 0.05
    fault_enabled: bool = False
    t_fault: float | None = None
    retained_fraction: float = 0.1
    dt: float | None = None
    t_end: float | None = None
    method: str = "trapezoidal"
    newton_tol: float = 3e-9
    newton_max_iter: int = 50
    startup: str = "dc-preset"
    channels: tuple[str, ...] = ALL_CHANNELS

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    def resolved_dt(self) -> float:
        return self.dt if self.dt is not None else self.period / SAMPLES_PER_CYCLE

    def resolved_t_end(self) -> float:
        return self.t_end if self.t_end is not None else DEFAULT_CYCLES * self.period

    def resolved_t_fault(self) -> float:
        return (self.t_fault if self.t_fault is not None
                else FAULT_DELAY_CYCLES * self.period)

    def build(self) -> tuple[CvsrSystem, SolverConfig]:
        """Materialize the solver inputs; resolves phase = "auto" against
        the startup magnetic state."""
        fault = FaultSpec(enabled=self.fault_enabled,
                          t_fault=self.resolved_t_fault() if self.fault_enabled else 0.0,
                          retained_fraction=self.retained_fraction)
        system = CvsrSystem(
            network=build_cvsr(self.device),
            source=AcSource(self.v_rms, self.frequency,
                            0.0 if self.phase == "auto" else float(self.phase)),
            load=SeriesLoad(self.resistance, self.inductance),
            bias=DcBias(self.dc_bias, mode=self.dc_mode,
                        source_resistance=self.dc_resistance),
            fault=fault,
        )
        if self.phase == "auto":
            system = replace(system, source=AcSource(
                self.v_rms, self.frequency, auto_phase(system, self.startup)))
        config = SolverConfig(dt=self.resolved_dt(), t_end=self.resolved_t_end(),
                              method=self.method, newton_tol=self.newton_tol,
                              newton_max_iter=self.newton_max_iter,
                              startup=self.startup)
        return system, config


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ScenarioError(message)


def _num(mapping: dict, key: str, default, *, low=None, high=None,
         low_open=False, allow_none=False, section=""):
    label = f"{section}.{key}" if section else key
    value = mapping.get(key, default)
    if value is None:
        _require(allow_none, f"{label} must be a number, got null")
        return None
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             f"{label} must be a number, got {value!r}")
    value = float(value)
    _require(math.isfinite(value), f"{label} must be finite, got {value!r}")
    if low is not None:
        if low_open:
            _require(value > low, f"{label} must be > {low}, got {value}")
        else:
            _require(value >= low, f"{label} must be >= {low}, got {value}")
    if high is not None:
        _require(value <= high, f"{label} must be <= {high}, got {value}")
    return value


def _int(mapping: dict, key: str, default, *, low, section=""):
    label = f"{section}.{key}" if section else key
    value = mapping.get(key, default)
    _require(isinstance(value, int) and not isinstance(value, bool),
             f"{label} must be an integer, got {value!r}")
    _require(value >= low, f"{label} must be >= {low}, got {value}")
    return value


def _bool(mapping: dict, key: str, default, section=""):
    label = f"{section}.{key}" if section else key
    value = mapping.get(key, default)
    _require(isinstance(value, bool), f"{label} must be true/false, got {value!r}")
    return value


def _choice(mapping: dict, key: str, default, options, section=""):
    label = f"{section}.{key}" if section else key
    value = mapping.get(key, default)
    _require(value in options, f"{label} must be one of {options}, got {value!r}")
    return value


def _section(doc: dict, key: str, known: set[str]) -> dict:
    value = doc.get(key) or {}
    _require(isinstance(value, dict), f"{key} must be a mapping, got {value!r}")
    unknown = sorted(set(value) - known)
    _require(not unknown, f"unknown keys under {key}: {', '.join(unknown)}")
    return value


def parse_scenario(text: str, name: str | None = None) -> Scenario:
    """Parse and validate a scenario document; defaults fill every gap."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    _require(isinstance(doc, dict), f"document must be a mapping, got {type(doc).__name__}")

    top_known = {"schema_version", "name", "device", "source", "load",
                 "dc_bias_A", "dc_source", "fault", "solver", "outputs"}
    unknown = sorted(set(doc) - top_known)
    _require(not unknown, f"unknown top-level keys: {', '.join(unknown)}")

    version = doc.get("schema_version", SCHEMA_VERSION)
    _require(version == SCHEMA_VERSION,
             f"schema_version must be {SCHEMA_VERSION}, got {version!r}")

    device = _section(doc, "device", {
        "middle_leg_length_m", "outer_leg_length_m", "cross_section_area_m2",
        "middle_area_factor", "air_gap_length_m", "fringing",
        "ac_turns", "dc_turns", "material"})
    material = _section(device, "material", {
        "b_sat_T", "mu_r_init", "knee_sharpness", "saturation_overshoot",
        "curve_csv"})
    source = _section(doc, "source", {"v_rms_V", "frequency_Hz", "phase_rad"})
    load = _section(doc, "load", {"resistance_ohm", "inductance_H"})
    dc_source = _section(doc, "dc_source", {"mode", "resistance_ohm"})
    fault = _section(doc, "fault", {"enabled", "t_fault_s", "retained_fraction"})
    solver = _section(doc, "solver", {"dt_s", "t_end_s", "method", "newton_tol",
                                      "newton_max_iter", "startup"})
    outputs = _section(doc, "outputs", {"channels"})

    curve_csv = material.get("curve_csv")
    if curve_csv is not None:
        _require(isinstance(curve_csv, str),
                 f"device.material.curve_csv must be a path string, got {curve_csv!r}")
        curve = load_curve_csv(curve_csv)
    else:
        curve = MaterialCurve(
            b_sat=_num(material, "b_sat_T", 1.34, low=0.0, low_open=True,
                       section="device.material"),
            mu_r_init=_num(material, "mu_r_init", 2500.0, low=1.0, low_open=True,
                           section="device.material"),
            knee_sharpness=_num(material, "knee_sharpness", 3.0, low=1.0,
                                section="device.material"),
            saturation_overshoot=_num(material, "saturation_overshoot", 1.05,
                                      low=1.0, low_open=True,
                                      section="device.material"),
        )

    try:
        params = CvsrParams(
            middle_leg_length=_num(device, "middle_leg_length_m", 0.4572,
                                   low=0.0, low_open=True, section="device"),
            outer_leg_length=_num(device, "outer_leg_length_m", 0.8636,
                                  low=0.0, low_open=True, section="device"),
            cross_section_area=_num(device, "cross_section_area_m2", 0.0103,
                                    low=0.0, low_open=True, section="device"),
            middle_area_factor=_num(device, "middle_area_factor", 2.0,
                                    low=0.0, low_open=True, section="device"),
            air_gap_length=_num(device, "air_gap_length_m", 0.002014,
                                low=0.0, low_open=True, section="device"),
            fringing=_bool(device, "fringing", True, section="device"),
            ac_turns=_int(device, "ac_turns", 300, low=1, section="device"),
            dc_turns=_int(device, "dc_turns", 450, low=1, section="device"),
            curve=curve,
        )
    except ValidationError as exc:
        raise ScenarioError(str(exc)) from exc

    phase = source.get("phase_rad", "auto")
    if phase != "auto":
        phase = _num(source, "phase_rad", 0.0, section="source")

    frequency = _num(source, "frequency_Hz", 60.0, low=0.0, low_open=True,
                     section="source")
    period = 1.0 / frequency

    scenario_name = doc.get("name", name or "default")
    _require(isinstance(scenario_name, str) and scenario_name,
             f"name must be a non-empty string, got {scenario_name!r}")

    channels = outputs.get("channels", "all")
    if channels == "all":
        channels = ALL_CHANNELS
    else:
        _require(isinstance(channels, list) and channels,
                 f"outputs.channels must be 'all' or a non-empty list, got {channels!r}")
        bad = sorted(set(channels) - set(ALL_CHANNELS))
        _require(not bad, f"outputs.channels contains unknown channels: {', '.join(bad)}")
        if "t" not in channels:
            channels = ["t"] + list(channels)
        channels = tuple(channels)

    scenario = Scenario(
        name=scenario_name,
        device=params,
        v_rms=_num(source, "v_rms_V", 2400.0, low=0.0, section="source"),
        frequency=frequency,
        phase=phase,
        resistance=_num(load, "resistance_ohm", 100.0, low=0.0, section="load"),
        inductance=_num(load, "inductance_H", 0.13, low=0.0, section="load"),
        dc_bias=_num(doc, "dc_bias_A", 0.0),
        dc_mode=_choice(dc_source, "mode", "voltage", ("voltage", "current"),
                        section="dc_source"),
        dc_resistance=_num(dc_source, "resistance_ohm", 0.05, low=0.0,
                           low_open=True, section="dc_source"),
        fault_enabled=_bool(fault, "enabled", False, section="fault"),
        t_fault=_num(fault, "t_fault_s", None, low=0.0, allow_none=True,
                     section="fault"),
        retained_fraction=_num(fault, "retained_fraction", 0.1, low=0.0,
                               high=1.0, low_open=True, section="fault"),
        dt=_num(solver, "dt_s", None, low=0.0, low_open=True, allow_none=True,
                section="solver"),
        t_end=_num(solver, "t_end_s", None, low=0.0, low_open=True,
                   allow_none=True, section="solver"),
        method=_choice(solver, "method", "trapezoidal",
                       ("trapezoidal", "backward-euler"), section="solver"),
        newton_tol=_num(solver, "newton_tol", 3e-9, low=0.0, low_open=True,
                        section="solver"),
        newton_max_iter=_int(solver, "newton_max_iter", 50, low=1,
                             section="solver"),
        startup=_choice(solver, "startup", "dc-preset", ("cold", "dc-preset"),
                        section="solver"),
        channels=channels,
    )
    dt = scenario.resolved_dt()
    _require(scenario.resolved_t_end() > dt,
             f"solver.t_end_s must exceed dt ({dt}), got {scenario.resolved_t_end()}")
    _require(period / dt >= 8,
             f"solver.dt_s too coarse: fewer than 8 samples per period ({period / dt:.1f})")
    return scenario


BIAS_POINTS = ((0.0, "dc0"), (0.02, "dc20mA"), (0.075, "dc75mA"), (5.0, "dc5A"))


def builtin_suite(suite: str) -> list[Scenario]:
    """Built-in study matrices.

    "nominal": the four bias points (0, 20 mA, 75 mA, 5 A) for 10 cycles.
    "fault":   the same biases with a 90%-bypass fault after 2 normal
               cycles, run for 8 more cycles.
    """
    if suite == "nominal":
        return [Scenario(name=f"nominal-{tag}", dc_bias=bias)
                for bias, tag in BIAS_POINTS]
    if suite == "fault":
        return [Scenario(name=f"fault-{tag}", dc_bias=bias, fault_enabled=True)
                for bias, tag in BIAS_POINTS]
    raise ScenarioError(f"unknown suite {suite!r}; available: nominal, fault")
