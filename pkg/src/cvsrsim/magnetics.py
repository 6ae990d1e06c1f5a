"""Magnetic network elements and the fixed three-leg reactor topology.

Windings couple the electric and magnetic sides as gyrators: winding
MMF = polarity*turns*current drives the magnetic loop, and winding
voltage = polarity*turns*d(flux)/dt appears on the electric side.
Core legs and the air gap are flux-storage branches whose "voltage" is
the MMF drop across them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .material import MU_0, MaterialCurve


class ValidationError(ValueError):
    """A component was built with out-of-range parameters."""


@dataclass(frozen=True)
class MagneticLeg:
    """Uniform ferromagnetic path: mean length [m], cross-section [m^2],
    and the material curve that maps flux density to field intensity."""

    length: float
    area: float
    curve: object

    def __post_init__(self) -> None:
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValidationError(f"leg length must be > 0, got {self.length!r}")
        if not (math.isfinite(self.area) and self.area > 0):
            raise ValidationError(f"leg area must be > 0, got {self.area!r}")

    def b(self, flux: float) -> float:
        return flux / self.area

    def mmf(self, flux: float) -> float:
        """MMF drop F(flux) = H(flux/area)*length [A-turns]; odd, increasing."""
        return self.curve.h_of_b(flux / self.area) * self.length

    def mmf_slope(self, flux: float) -> float:
        """dF/dflux [A-turns/Wb]."""
        return self.curve.dh_db(flux / self.area) * self.length / self.area

    def flux_of_mmf(self, mmf: float) -> float:
        """Inverse of :meth:`mmf` (exact via the material's forward curve)."""
        return self.curve.b_of_h(mmf / self.length) * self.area

    def energy(self, flux: float) -> float:
        """Stored field energy [J] at the given flux."""
        return self.curve.energy_density(flux / self.area) * self.area * self.length


@dataclass(frozen=True)
class AirGap:
    """Linear gap in a core leg.  With fringing enabled the effective area
    is enlarged by one gap length on each side of the (assumed square)
    cross-section: A_eff = (sqrt(A) + l_g)^2."""

    gap_length: float
    core_area: float
    fringing_enabled: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gap_length) and self.gap_length > 0):
            raise ValidationError(f"gap length must be > 0, got {self.gap_length!r}")
        if not (math.isfinite(self.core_area) and self.core_area > 0):
            raise ValidationError(f"gap core area must be > 0, got {self.core_area!r}")

    @property
    def effective_area(self) -> float:
        if self.fringing_enabled:
            return (math.sqrt(self.core_area) + self.gap_length) ** 2
        return self.core_area

    @property
    def permeance(self) -> float:
        """mu_0 * A_eff / l_g [Wb/A-turn]."""
        return MU_0 * self.effective_area / self.gap_length

    def mmf(self, flux: float) -> float:
        return flux / self.permeance

    def mmf_slope(self, flux: float) -> float:
        return 1.0 / self.permeance

    def energy(self, flux: float) -> float:
        return 0.5 * flux * flux / self.permeance


@dataclass(frozen=True)
class Winding:
    """Gyrator between the electric and magnetic circuits."""

    turns: int
    polarity: int = 1

    def __post_init__(self) -> None:
        if self.turns < 1 or int(self.turns) != self.turns:
            raise ValidationError(f"turns must be a positive integer, got {self.turns!r}")
        if self.polarity not in (-1, 1):
            raise ValidationError(f"polarity must be +1 or -1, got {self.polarity!r}")

    def mmf(self, current: float) -> float:
        """Driving MMF [A-turns] for a terminal current [A]."""
        return self.polarity * self.turns * current

    def emf(self, flux_rate: float) -> float:
        """Terminal voltage [V] for a linked flux rate [Wb/s]."""
        return self.polarity * self.turns * flux_rate


@dataclass(frozen=True)
class CvsrParams:
    """Device geometry and winding counts (defaults: 50 kVA prototype).

    The centre limb carries the sum of the outer-leg fluxes, so its
    cross-section is scaled up by ``middle_area_factor`` (shell-type
    construction); the air gap sits in the centre limb and shares its
    area.
    """

    middle_leg_length: float = 0.4572      # m
    outer_leg_length: float = 0.8636       # m
    cross_section_area: float = 0.0103     # m^2 (outer legs)
    middle_area_factor: float = 2.0
    air_gap_length: float = 0.002014       # m
    fringing: bool = True
    ac_turns: int = 300
    dc_turns: int = 450
    curve: object = field(default_factory=MaterialCurve)

    def __post_init__(self) -> None:
        for name in ("middle_leg_length", "outer_leg_length", "cross_section_area",
                     "middle_area_factor", "air_gap_length"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a positive number, got {value!r}")
        for name in ("ac_turns", "dc_turns"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class CvsrNetwork:
    """Three-leg saturable reactor.

    The ac winding sits on the gapped centre limb; one dc coil sits on
    each outer leg.  Dot placement: the ac winding drives flux down the
    centre limb and out through both outer legs symmetrically; the dc
    coils are wound in series opposition with respect to the centre limb
    (polarities -1 and +1), so their MMFs aid each other around the
    outer loop and cancel in the centre.  Flux is conserved at the
    T-node by construction: flux_middle == flux_left + flux_right.
    """

    middle: MagneticLeg
    left: MagneticLeg
    right: MagneticLeg
    gap: AirGap
    ac_winding: Winding
    dc_left: Winding
    dc_right: Winding
    params: CvsrParams | None = None

    @staticmethod
    def flux_middle(flux_left: float, flux_right: float) -> float:
        return flux_left + flux_right


def build_cvsr(params: CvsrParams | None = None) -> CvsrNetwork:
    """Assemble the reactor network from a geometry parameter set."""
    p = params if params is not None else CvsrParams()
    mid_area = p.middle_area_factor * p.cross_section_area
    return CvsrNetwork(
        middle=MagneticLeg(p.middle_leg_length, mid_area, p.curve),
        left=MagneticLeg(p.outer_leg_length, p.cross_section_area, p.curve),
        right=MagneticLeg(p.outer_leg_length, p.cross_section_area, p.curve),
        gap=AirGap(p.air_gap_length, mid_area, p.fringing),
        ac_winding=Winding(p.ac_turns, +1),
        dc_left=Winding(p.dc_turns, -1),
        dc_right=Winding(p.dc_turns, +1),
        params=p,
    )


def magnetic_residual(net: CvsrNetwork, flux_left: float, flux_right: float,
                      i_ac: float, i_dc: float) -> tuple[float, float]:
    """Loop MMF balance for the two windows of the core [A-turns].

    Each loop runs through the centre limb (leg + gap) and one outer
    leg.  Both vanish at a consistent magnetic state.
    """
    flux_mid = flux_left + flux_right
    centre_drop = net.middle.mmf(flux_mid) + net.gap.mmf(flux_mid)
    f_ac = net.ac_winding.mmf(i_ac)
    r_left = f_ac + net.dc_left.mmf(i_dc) - (centre_drop + net.left.mmf(flux_left))
    r_right = f_ac + net.dc_right.mmf(i_dc) - (centre_drop + net.right.mmf(flux_right))
    return r_left, r_right


def residual_jacobian(net: CvsrNetwork, flux_left: float, flux_right: float,
                      i_ac: float, i_dc: float) -> np.ndarray:
    """Analytic partials of (r_left, r_right) w.r.t. (flux_left, flux_right, i_ac)."""
    flux_mid = flux_left + flux_right
    centre_slope = net.middle.mmf_slope(flux_mid) + net.gap.mmf_slope(flux_mid)
    n_ac = net.ac_winding.polarity * net.ac_winding.turns
    return np.array([
        [-(centre_slope + net.left.mmf_slope(flux_left)), -centre_slope, n_ac],
        [-centre_slope, -(centre_slope + net.right.mmf_slope(flux_right)), n_ac],
    ])


def field_energy(net: CvsrNetwork, flux_left: float, flux_right: float) -> float:
    """Total stored magnetic energy [J] of legs and gap at the given state."""
    flux_mid = flux_left + flux_right
    return (net.middle.energy(flux_mid) + net.gap.energy(flux_mid)
            + net.left.energy(flux_left) + net.right.energy(flux_right))


def incremental_series_permeance(net: CvsrNetwork, flux_left: float = 0.0,
                                 flux_right: float = 0.0) -> float:
    """Small-signal permeance seen by the ac winding at a magnetic state:
    centre limb and gap in series with the parallel pair of outer legs."""
    flux_mid = flux_left + flux_right
    p_mid = 1.0 / net.middle.mmf_slope(flux_mid)
    p_gap = net.gap.permeance
    p_outer = (1.0 / net.left.mmf_slope(flux_left)
               + 1.0 / net.right.mmf_slope(flux_right))
    return 1.0 / (1.0 / p_mid + 1.0 / p_gap + 1.0 / p_outer)
