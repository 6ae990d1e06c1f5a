import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvsrsim.material import (MU_0, ConstantPermeabilityCurve, CurveError,
                              MaterialCurve, TabulatedCurve, load_curve_csv)

CURVE = MaterialCurve(b_sat=1.34, mu_r_init=2500.0)


def deep_saturation_field(curve):
    """Smallest doubling of h_knee where the core magnetization sits
    within 0.003% of its plateau, i.e. only the vacuum term still grows."""
    h = curve.h_knee
    for _ in range(60):
        if curve.b_of_h(h) - MU_0 * h > (1.0 - 3e-5) * curve.b_plateau:
            return h
        h *= 2.0
    raise AssertionError("no deep-saturation field found")


class TestForwardCurve:
    def test_zero(self):
        assert CURVE.b_of_h(0.0) == 0.0

    def test_odd_at_100(self):
        assert CURVE.b_of_h(-100.0) == -CURVE.b_of_h(100.0)

    def test_deep_saturation_slope_is_vacuum(self):
        h_big = deep_saturation_field(CURVE)
        slope = (CURVE.b_of_h(h_big + 1000.0) - CURVE.b_of_h(h_big)) / 1000.0
        assert slope == pytest.approx(MU_0, rel=0.05)

    def test_initial_slope(self):
        assert CURVE.db_dh(0.0) == pytest.approx(2500.0 * MU_0, rel=0.01)

    def test_slope_exceeds_vacuum_everywhere(self):
        for h in (0.0, 1.0, 50.0, 300.0, 3e3, 1e5, 1e7):
            assert CURVE.db_dh(h) > MU_0

    def test_slope_approaches_vacuum_past_knee(self):
        h99 = CURVE.h_of_b(0.99 * CURVE.b_plateau)
        assert CURVE.db_dh(10.0 * h99) <= 1.05 * MU_0

    def test_non_finite_input_rejected(self):
        with pytest.raises(CurveError):
            CURVE.b_of_h(float("nan"))
        with pytest.raises(CurveError):
            CURVE.b_of_h(float("inf"))

    @given(st.floats(min_value=1e-3, max_value=1e6))
    def test_odd_property(self, h):
        assert CURVE.b_of_h(-h) == -CURVE.b_of_h(h)


class TestInverseCurve:
    def test_zero(self):
        assert CURVE.h_of_b(0.0) == 0.0

    def test_roundtrip_at_500(self):
        assert CURVE.h_of_b(CURVE.b_of_h(500.0)) == pytest.approx(500.0, rel=1e-8)

    def test_bracket_from_monotonicity(self):
        h_star = 1000.0
        b = 0.99 * CURVE.b_of_h(h_star)
        h = CURVE.h_of_b(b)
        assert 0.0 < h < h_star

    @given(st.floats(min_value=-1e5, max_value=1e5))
    def test_roundtrip_property(self, h):
        back = CURVE.h_of_b(CURVE.b_of_h(h))
        assert abs(back - h) <= 1e-8 * max(1.0, abs(h))

    @given(st.floats(min_value=-2.0, max_value=2.0),
           st.floats(min_value=1e-6, max_value=0.5))
    def test_strictly_increasing(self, b, gap):
        assert CURVE.h_of_b(b) < CURVE.h_of_b(b + gap)

    def test_nan_rejected(self):
        with pytest.raises(CurveError):
            CURVE.h_of_b(float("nan"))


class TestDifferentialReluctivity:
    def test_at_origin(self):
        assert CURVE.dh_db(0.0) == pytest.approx(1.0 / (2500.0 * MU_0), rel=0.01)

    def test_matches_finite_difference(self):
        b = 0.5
        delta = 1e-6
        fd = (CURVE.h_of_b(b + delta) - CURVE.h_of_b(b - delta)) / (2 * delta)
        assert CURVE.dh_db(b) == pytest.approx(fd, rel=1e-4)

    @given(st.floats(min_value=0.0, max_value=2.0))
    def test_even(self, b):
        assert CURVE.dh_db(b) == CURVE.dh_db(-b)

    @given(st.floats(min_value=-2.0, max_value=2.0))
    def test_matches_finite_difference_everywhere(self, b):
        delta = 1e-6
        fd = (CURVE.h_of_b(b + delta) - CURVE.h_of_b(b - delta)) / (2 * delta)
        assert CURVE.dh_db(b) == pytest.approx(fd, rel=1e-4)

    def test_positive(self):
        for b in (-1.8, -0.7, 0.0, 0.3, 1.34, 1.9):
            assert CURVE.dh_db(b) > 0.0


class TestParameterValidation:
    @pytest.mark.parametrize("kwargs", [
        {"b_sat": 0.0}, {"b_sat": -1.0}, {"b_sat": float("nan")},
        {"mu_r_init": 1.0}, {"mu_r_init": -5.0},
        {"knee_sharpness": 0.5},
        {"saturation_overshoot": 1.0}, {"saturation_overshoot": 0.9},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(CurveError):
            MaterialCurve(**kwargs)


class TestEnergyDensity:
    def test_zero(self):
        assert CURVE.energy_density(0.0) == 0.0

    def test_matches_trapezoid_oracle(self):
        b = 1.2
        grid = np.linspace(0.0, b, 4001)
        h_vals = [CURVE.h_of_b(x) for x in grid]
        expected = np.trapezoid(h_vals, grid)
        assert CURVE.energy_density(b) == pytest.approx(expected, rel=1e-6)

    def test_even_in_b(self):
        assert CURVE.energy_density(-0.9) == pytest.approx(
            CURVE.energy_density(0.9), rel=1e-12)


class TestConstantPermeabilityCurve:
    def test_forward(self):
        lin = ConstantPermeabilityCurve(2500.0)
        assert lin.b_of_h(100.0) == 2500.0 * MU_0 * 100.0

    def test_inverse_and_slopes(self):
        lin = ConstantPermeabilityCurve(2500.0)
        assert lin.h_of_b(lin.b_of_h(42.0)) == pytest.approx(42.0, rel=1e-14)
        assert lin.db_dh(5.0) == 2500.0 * MU_0
        assert lin.dh_db(0.3) == 1.0 / (2500.0 * MU_0)

    def test_energy(self):
        lin = ConstantPermeabilityCurve(100.0)
        b = 0.8
        assert lin.energy_density(b) == pytest.approx(
            0.5 * b * b / (100.0 * MU_0), rel=1e-12)


SAMPLE_CSV = """h_A_per_m,b_tesla
0,0
50,0.45
150,0.95
400,1.25
2000,1.42
20000,1.55
"""


class TestTabulatedCurve:
    @pytest.fixture()
    def curve(self, tmp_path):
        path = tmp_path / "steel.csv"
        path.write_text(SAMPLE_CSV)
        return load_curve_csv(path)

    def test_interpolates_through_points(self, curve):
        assert curve.b_of_h(150.0) == pytest.approx(0.95, rel=1e-12)

    def test_odd_mirror(self, curve):
        assert curve.b_of_h(-150.0) == pytest.approx(-0.95, rel=1e-12)

    def test_roundtrip(self, curve):
        for h in (10.0, 120.0, 900.0, 5e4):
            assert curve.h_of_b(curve.b_of_h(h)) == pytest.approx(h, rel=1e-8)

    def test_extrapolation_slope_at_least_vacuum(self, curve):
        assert curve.db_dh(1e6) >= MU_0

    def test_dh_db_positive(self, curve):
        for b in (-1.5, -0.4, 0.1, 1.0, 1.54, 2.0):
            assert curve.dh_db(b) > 0.0

    def test_rejects_missing_origin(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("h_A_per_m,b_tesla\n10,0.1\n20,0.2\n30,0.3\n")
        with pytest.raises(CurveError):
            load_curve_csv(path)

    def test_rejects_negative_h(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("h_A_per_m,b_tesla\n0,0\n-5,-0.1\n10,0.2\n")
        with pytest.raises(CurveError):
            load_curve_csv(path)

    def test_rejects_non_monotone(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("h_A_per_m,b_tesla\n0,0\n10,0.3\n20,0.2\n")
        with pytest.raises(CurveError):
            load_curve_csv(path)

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("h,b\n0,0\n10,0.2\n20,0.3\n")
        with pytest.raises(CurveError):
            load_curve_csv(path)

    def test_rejects_too_few_points(self):
        with pytest.raises(CurveError):
            TabulatedCurve([0.0, 1.0], [0.0, 0.5])
