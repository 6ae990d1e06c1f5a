import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from cvsrsim.magnetics import (AirGap, CvsrNetwork, CvsrParams, MagneticLeg,
                               ValidationError, Winding, build_cvsr,
                               field_energy, incremental_series_permeance,
                               magnetic_residual, residual_jacobian)
from cvsrsim.material import MU_0, MaterialCurve

CURVE = MaterialCurve()
MIDDLE = MagneticLeg(length=0.4572, area=0.0103, curve=CURVE)
OUTER = MagneticLeg(length=0.8636, area=0.0103, curve=CURVE)


class TestMagneticLeg:
    def test_zero_flux_zero_mmf(self):
        assert MIDDLE.mmf(0.0) == 0.0

    def test_linear_region_hand_value(self):
        # At 0.1 T the material is still near its initial permeability, so
        # F ~= (B / (mu_r_init*mu_0)) * length.
        b = 0.1
        flux = b * MIDDLE.area
        expected = b / (2500.0 * MU_0) * 0.4572
        assert MIDDLE.mmf(flux) == pytest.approx(expected, rel=0.02)

    def test_knee_slope_ratio(self):
        # dF/dflux at the knee flux exceeds the origin slope by >= 10x.
        flux_sat = 1.34 * 0.0103
        assert flux_sat == pytest.approx(0.0138, abs=2e-4)
        ratio = MIDDLE.mmf_slope(flux_sat) / MIDDLE.mmf_slope(0.0)
        assert math.isfinite(MIDDLE.mmf(flux_sat))
        assert ratio >= 10.0

    @given(st.floats(min_value=1e-6, max_value=0.05))
    def test_odd(self, flux):
        assert OUTER.mmf(-flux) == -OUTER.mmf(flux)

    @given(st.floats(min_value=-0.03, max_value=0.03),
           st.floats(min_value=1e-6, max_value=0.01))
    def test_strictly_increasing(self, flux, gap):
        assert OUTER.mmf(flux) < OUTER.mmf(flux + gap)

    def test_flux_of_mmf_roundtrip(self):
        flux = 0.009
        assert OUTER.flux_of_mmf(OUTER.mmf(flux)) == pytest.approx(flux, rel=1e-10)

    def test_validation(self):
        with pytest.raises(ValidationError):
            MagneticLeg(length=0.0, area=0.01, curve=CURVE)
        with pytest.raises(ValidationError):
            MagneticLeg(length=0.5, area=-1.0, curve=CURVE)


class TestAirGap:
    def test_zero(self):
        gap = AirGap(0.002014, 0.0103, fringing_enabled=False)
        assert gap.mmf(0.0) == 0.0

    def test_no_fringing_permeance_value(self):
        gap = AirGap(0.002014, 0.0103, fringing_enabled=False)
        assert gap.permeance == pytest.approx(MU_0 * 0.0103 / 0.002014, rel=1e-12)
        assert gap.permeance == pytest.approx(6.43e-6, rel=1e-3)

    def test_fringing_enlarges_permeance(self):
        bare = AirGap(0.002014, 0.0103, fringing_enabled=False)
        fringed = AirGap(0.002014, 0.0103, fringing_enabled=True)
        assert fringed.permeance > bare.permeance

    def test_linear(self):
        gap = AirGap(0.002014, 0.0103)
        assert gap.mmf(0.02) == pytest.approx(2 * gap.mmf(0.01), rel=1e-12)
        assert gap.mmf_slope(0.5) == 1.0 / gap.permeance

    def test_validation(self):
        with pytest.raises(ValidationError):
            AirGap(0.0, 0.0103)


class TestWinding:
    def test_dc_bias_mmf(self):
        assert Winding(450, +1).mmf(0.075) == pytest.approx(33.75, rel=1e-12)

    def test_zero_current(self):
        assert Winding(17).mmf(0.0) == 0.0

    def test_polarity_sign(self):
        w = Winding(300, -1)
        assert w.mmf(2.0) == -600.0

    def test_emf_zero(self):
        assert Winding(123).emf(0.0) == 0.0

    def test_emf_value(self):
        assert Winding(300, +1).emf(1e-3) == pytest.approx(0.3, rel=1e-12)

    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_emf_linear(self, a, b):
        w = Winding(55)
        assert w.emf(a + b) == pytest.approx(w.emf(a) + w.emf(b), abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValidationError):
            Winding(0)
        with pytest.raises(ValidationError):
            Winding(10, polarity=2)


class TestBuilder:
    def test_defaults_match_reference_device(self):
        net = build_cvsr()
        assert net.middle.length == 0.4572
        assert net.left.length == 0.8636
        assert net.right.length == 0.8636
        assert net.left.area == 0.0103
        assert net.right.area == 0.0103
        assert net.middle.area == pytest.approx(2.0 * 0.0103, rel=1e-12)
        assert net.gap.gap_length == 0.002014
        assert net.ac_winding.turns == 300
        assert net.dc_left.turns == 450
        assert net.dc_right.turns == 450
        # dc coils wound so their MMFs circulate around the outer loop
        assert net.dc_left.polarity * net.dc_right.polarity == -1

    def test_parameter_roundtrip(self):
        params = CvsrParams(middle_leg_length=0.5, outer_leg_length=0.9,
                            cross_section_area=0.011, middle_area_factor=1.7,
                            air_gap_length=0.003, ac_turns=200, dc_turns=400)
        net = build_cvsr(params)
        assert net.params == params
        assert net.middle.length == 0.5
        assert net.middle.area == pytest.approx(1.7 * 0.011, rel=1e-12)
        assert net.gap.core_area == net.middle.area

    def test_zero_area_rejected(self):
        with pytest.raises(ValidationError):
            CvsrParams(cross_section_area=0.0)

    def test_non_integer_turns_rejected(self):
        with pytest.raises(ValidationError):
            CvsrParams(ac_turns=10.5)

    def test_flux_node_identity(self):
        assert CvsrNetwork.flux_middle(0.012, -0.005) == 0.012 + (-0.005)


class TestMagneticResidual:
    def setup_method(self):
        self.net = build_cvsr()

    def test_all_zero_state(self):
        assert magnetic_residual(self.net, 0.0, 0.0, 0.0, 0.0) == (0.0, 0.0)

    def test_dc_solution_matches_bisection_oracle(self):
        # With i_ac = 0 and identical outer legs, symmetry forces zero
        # centre flux; the left-leg flux solves F_left(phi) = -N_dc*i_dc.
        i_dc = 0.5
        target = -450.0 * i_dc
        phi = brentq(lambda x: self.net.left.mmf(x) - target, -0.05, 0.0,
                     xtol=1e-15)
        r_left, r_right = magnetic_residual(self.net, phi, -phi, 0.0, i_dc)
        assert abs(r_left) < 1e-6
        assert abs(r_right) < 1e-6

    @given(st.floats(-0.02, 0.02), st.floats(-0.02, 0.02),
           st.floats(-30, 30), st.floats(-5, 5))
    def test_relabel_symmetry(self, fl, fr, i_ac, i_dc):
        r1, r2 = magnetic_residual(self.net, fl, fr, i_ac, i_dc)
        s1, s2 = magnetic_residual(self.net, fr, fl, i_ac, -i_dc)
        assert (s1, s2) == (r2, r1)


class TestResidualJacobian:
    def setup_method(self):
        self.net = build_cvsr()

    def test_current_column_is_turns_count(self):
        jac = residual_jacobian(self.net, 0.003, -0.001, 2.0, 0.1)
        assert jac[0, 2] == 300.0
        assert jac[1, 2] == 300.0

    def _fd(self, state, row, col, delta):
        def res(fl, fr, i):
            return magnetic_residual(self.net, fl, fr, i, state[3])[row]
        base = list(state[:3])
        hi = base.copy()
        lo = base.copy()
        hi[col] += delta
        lo[col] -= delta
        return (res(*hi) - res(*lo)) / (2 * delta)

    def test_zero_state_cross_term(self):
        jac = residual_jacobian(self.net, 0.0, 0.0, 0.0, 0.0)
        fd = self._fd((0.0, 0.0, 0.0, 0.0), row=0, col=1, delta=1e-9)
        assert jac[0, 1] == pytest.approx(fd, rel=1e-6)
        expected = -(self.net.middle.mmf_slope(0.0) + self.net.gap.mmf_slope(0.0))
        assert jac[0, 1] == pytest.approx(expected, rel=1e-12)

    def test_full_block_at_saturated_state(self):
        state = (0.0145, 0.002, 12.0, 5.0)
        jac = residual_jacobian(self.net, *state)
        for row in range(2):
            for col in range(2):
                fd = self._fd(state, row, col, delta=1e-9)
                assert jac[row, col] == pytest.approx(fd, rel=1e-5)


class TestEnergyAndPermeance:
    def test_energy_zero_state(self):
        net = build_cvsr()
        assert field_energy(net, 0.0, 0.0) == 0.0

    def test_energy_positive(self):
        net = build_cvsr()
        assert field_energy(net, 0.004, 0.006) > 0.0

    def test_incremental_permeance_at_zero(self):
        net = build_cvsr()
        p_mid = 2500 * MU_0 * net.middle.area / net.middle.length
        p_out = 2500 * MU_0 * net.left.area / net.left.length
        expected = 1.0 / (1.0 / p_mid + 1.0 / net.gap.permeance + 1.0 / (2 * p_out))
        assert incremental_series_permeance(net) == pytest.approx(expected, rel=1e-9)
