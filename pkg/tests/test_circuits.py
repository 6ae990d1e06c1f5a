import math

import pytest
from hypothesis import given, strategies as st

from cvsrsim.circuits import (AcSource, DcBias, FaultSpec, SeriesLoad,
                              effective_load, source_voltage)
from cvsrsim.magnetics import ValidationError


class TestAcSource:
    def test_zero_crossing_at_origin(self):
        src = AcSource(v_rms=2400.0, frequency=60.0, phase=0.0)
        assert source_voltage(src, 0.0) == 0.0

    def test_peak_value(self):
        src = AcSource(2400.0, 60.0, 0.0)
        quarter = 0.25 / 60.0
        assert source_voltage(src, quarter) == pytest.approx(
            math.sqrt(2) * 2400.0, rel=1e-9)
        assert source_voltage(src, quarter) == pytest.approx(3394.1, abs=0.1)

    def test_period(self):
        src = AcSource(2400.0, 60.0, 0.3)
        assert src.period == pytest.approx(1.0 / 60.0, rel=1e-15)
        for t in (0.001, 0.0042, 0.009):
            assert source_voltage(src, t + src.period) == pytest.approx(
                source_voltage(src, t), abs=1e-8)

    def test_validation(self):
        with pytest.raises(ValidationError):
            AcSource(v_rms=-1.0)
        with pytest.raises(ValidationError):
            AcSource(frequency=0.0)


class TestSeriesLoad:
    def test_impedance_and_power_factor_pin_60hz(self):
        # The reference load gives power factor 0.9 only at 60 Hz, which is
        # how the otherwise unstated system frequency is fixed.
        load = SeriesLoad(100.0, 0.13)
        z = load.impedance(60.0)
        assert abs(z) == pytest.approx(111.36, abs=0.01)
        pf = load.resistance / abs(z)
        assert pf == pytest.approx(0.9, rel=0.005)
        pf50 = load.resistance / abs(load.impedance(50.0))
        assert abs(pf50 - 0.9) / 0.9 > 0.005

    def test_validation(self):
        with pytest.raises(ValidationError):
            SeriesLoad(0.0, 0.0)
        with pytest.raises(ValidationError):
            SeriesLoad(-1.0, 0.1)


class TestFaultSwitch:
    def test_disabled(self):
        load = SeriesLoad(100.0, 0.13)
        fault = FaultSpec(enabled=False)
        for t in (0.0, 0.02, 5.0):
            assert effective_load(load, fault, t) == (100.0, 0.13)

    def test_faulted_values(self):
        load = SeriesLoad(100.0, 0.13)
        fault = FaultSpec(enabled=True, t_fault=2.0 / 60.0, retained_fraction=0.1)
        r, l = effective_load(load, fault, 2.0 / 60.0)
        assert r == pytest.approx(10.0, rel=1e-12)
        assert l == pytest.approx(0.013, rel=1e-12)

    def test_degenerate_full_retention(self):
        load = SeriesLoad(100.0, 0.13)
        fault = FaultSpec(enabled=True, t_fault=0.01, retained_fraction=1.0)
        assert effective_load(load, fault, 0.0) == effective_load(load, fault, 1.0)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_piecewise_constant(self, t):
        load = SeriesLoad(100.0, 0.13)
        fault = FaultSpec(enabled=True, t_fault=0.5, retained_fraction=0.1)
        r, l = effective_load(load, fault, t)
        if t < 0.5:
            assert (r, l) == (100.0, 0.13)
        else:
            assert r == pytest.approx(10.0)
            assert l == pytest.approx(0.013)

    def test_validation(self):
        with pytest.raises(ValidationError):
            FaultSpec(enabled=True, t_fault=-1.0)
        with pytest.raises(ValidationError):
            FaultSpec(retained_fraction=0.0)
        with pytest.raises(ValidationError):
            FaultSpec(retained_fraction=1.5)


class TestDcBias:
    def test_defaults(self):
        bias = DcBias(0.075)
        assert bias.mode == "voltage"
        assert bias.source_voltage == pytest.approx(
            0.075 * bias.source_resistance, rel=1e-12)

    def test_current_mode(self):
        bias = DcBias(5.0, mode="current")
        assert bias.i_dc == 5.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            DcBias(float("nan"))
        with pytest.raises(ValidationError):
            DcBias(1.0, mode="psychic")
        with pytest.raises(ValidationError):
            DcBias(1.0, source_resistance=0.0)
