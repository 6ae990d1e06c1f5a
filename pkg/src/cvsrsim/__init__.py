"""Time-domain simulator for a continuously variable series reactor:
a three-leg saturable core coupling an ac power circuit to a dc control
winding, with fault injection and waveform analytics."""

from .analysis import (AnalysisError, PowerTriple, SaturationSummary,
                       TimeSeries, dominant_frequency, induced_dc_voltage,
                       power_balance, rms, rolling_power, saturation_flags,
                       tone_magnitude)
from .circuits import (AcSource, DcBias, FaultSpec, SeriesLoad,
                       effective_load, source_voltage)
from .magnetics import (AirGap, CvsrNetwork, CvsrParams, MagneticLeg,
                        ValidationError, Winding, build_cvsr, field_energy,
                        incremental_series_permeance, magnetic_residual,
                        residual_jacobian)
from .material import (MU_0, ConstantPermeabilityCurve, CurveError,
                       MaterialCurve, TabulatedCurve, load_curve_csv)
from .scenario import (Scenario, ScenarioError, builtin_suite, parse_scenario)
from .solver import (CvsrSystem, SimState, SolverConfig, SolverError,
                     auto_phase, dc_operating_point, run,
                     small_signal_inductance, step)

__version__ = "0.1.0"

__all__ = [
    "AcSource", "AirGap", "AnalysisError", "ConstantPermeabilityCurve",
    "CurveError", "CvsrNetwork", "CvsrParams", "CvsrSystem", "DcBias",
    "FaultSpec", "MU_0", "MagneticLeg", "MaterialCurve", "PowerTriple",
    "SaturationSummary", "Scenario", "ScenarioError", "SeriesLoad",
    "SimState", "SolverConfig", "SolverError", "TabulatedCurve",
    "TimeSeries", "ValidationError", "Winding", "auto_phase", "build_cvsr",
    "builtin_suite", "dc_operating_point", "dominant_frequency",
    "effective_load", "field_energy", "incremental_series_permeance",
    "induced_dc_voltage", "load_curve_csv", "magnetic_residual",
    "parse_scenario", "power_balance", "residual_jacobian", "rms",
    "rolling_power", "run", "saturation_flags", "small_signal_inductance",
    "source_voltage", "step",
    "tone_magnitude",
]
