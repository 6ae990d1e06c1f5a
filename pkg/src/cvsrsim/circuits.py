"""Electrical environment: ac source, series R-L load with fault switch,
and the ideal dc bias source."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .magnetics import ValidationError


@dataclass(frozen=True)
class AcSource:
    """Sinusoidal voltage source v(t) = sqrt(2)*v_rms*sin(2*pi*f*t + phase)."""

    v_rms: float = 2400.0
    frequency: float = 60.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v_rms) and self.v_rms >= 0):
            raise ValidationError(f"v_rms must be >= 0, got {self.v_rms!r}")
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ValidationError(f"frequency must be > 0, got {self.frequency!r}")
        if not math.isfinite(self.phase):
            raise ValidationError(f"phase must be finite, got {self.phase!r}")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency

    def voltage(self, t: float) -> float:
        return math.sqrt(2.0) * self.v_rms * math.sin(self.omega * t + self.phase)


def source_voltage(src: AcSource, t: float) -> float:
    """Instantaneous source voltage [V] at time t >= 0."""
    return src.voltage(t)


@dataclass(frozen=True)
class SeriesLoad:
    """Series R-L load on the ac circuit."""

    resistance: float = 100.0
    inductance: float = 0.13

    def __post_init__(self) -> None:
        if not (math.isfinite(self.resistance) and self.resistance >= 0):
            raise ValidationError(f"resistance must be >= 0, got {self.resistance!r}")
        if not (math.isfinite(self.inductance) and self.inductance >= 0):
            raise ValidationError(f"inductance must be >= 0, got {self.inductance!r}")
        if self.resistance == 0 and self.inductance == 0:
            raise ValidationError("load must have nonzero resistance or inductance")

    def impedance(self, frequency: float) -> complex:
        return complex(self.resistance, 2.0 * math.pi * frequency * self.inductance)


@dataclass(frozen=True)
class FaultSpec:
    """Bolted fault bypassing part of the load at t_fault.

    From t_fault on, only ``retained_fraction`` of the load R and L stay
    in circuit.  retained_fraction = 1 degenerates to no fault.
    """

    enabled: bool = False
    t_fault: float = 0.0
    retained_fraction: float = 0.1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_fault) and self.t_fault >= 0):
            raise ValidationError(f"t_fault must be >= 0, got {self.t_fault!r}")
        if not (math.isfinite(self.retained_fraction)
                and 0.0 < self.retained_fraction <= 1.0):
            raise ValidationError(
                f"retained_fraction must be in (0, 1], got {self.retained_fraction!r}"
            )


@dataclass(frozen=True)
class DcBias:
    """Bias source for the dc control winding.

    mode "voltage" (default): a dc source of R*i_dc volts behind the
    winding-circuit resistance R.  The steady current equals ``i_dc``,
    but the instantaneous current responds to the induced winding
    voltage, which is what pins the circulating outer-loop flux on
    cycle timescales (a real supply or converter behaves this way and
    the full-saturation operating regime depends on it).

    mode "current": an ideal constant current source; the circulating
    flux is then free and the induced dc-side voltage is a pure output.
    """

    i_dc: float = 0.0
    mode: str = "voltage"
    source_resistance: float = 0.05

    def __post_init__(self) -> None:
        if not math.isfinite(self.i_dc):
            raise ValidationError(f"i_dc must be finite, got {self.i_dc!r}")
        if self.mode not in ("voltage", "current"):
            raise ValidationError(
                f"dc source mode must be 'voltage' or 'current', got {self.mode!r}"
            )
        if not (math.isfinite(self.source_resistance) and self.source_resistance > 0):
            raise ValidationError(
                f"source_resistance must be > 0, got {self.source_resistance!r}"
            )

    @property
    def source_voltage(self) -> float:
        """Open-circuit dc source value giving the commanded steady current."""
        return self.source_resistance * self.i_dc


def effective_load(load: SeriesLoad, fault: FaultSpec, t: float) -> tuple[float, float]:
    """(R_eff, L_eff) at time t: full load before the fault instant,
    the retained fraction from t_fault on."""
    if fault.enabled and t >= fault.t_fault:
        return (fault.retained_fraction * load.resistance,
                fault.retained_fraction * load.inductance)
    return (load.resistance, load.inductance)
