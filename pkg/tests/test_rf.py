import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hesskit import (
    AntennaPattern,
    DomainError,
    calibrate_pattern,
    coexistence_lookup,
    field_map,
    pattern_gain,
    power_vs_distance,
    received_power_dbm,
)
from hesskit.rf import (
    COEXISTENCE_TABLE,
    ISOTROPIC,
    MONOPOLE,
    PATCH,
    free_space_path_loss_db,
)

STEP_10_DEG = math.radians(180.0 / 18.0)


class TestPatternGain:
    def test_isotropic_everywhere_zero(self):
        p = AntennaPattern(kind=ISOTROPIC)
        for theta in (0.0, 0.7, math.pi / 2, math.pi):
            assert pattern_gain(p, theta, 0.3) == 0.0

    def test_monopole_peak_and_null(self):
        p = AntennaPattern(kind=MONOPOLE, peak_gain_dbi=2.2)
        assert pattern_gain(p, math.pi / 2, 0.0) == pytest.approx(2.2)
        assert pattern_gain(p, 0.0, 0.0) == -60.0

    def test_monopole_azimuth_independent(self):
        p = AntennaPattern(kind=MONOPOLE, peak_gain_dbi=1.0)
        gains = {pattern_gain(p, 1.0, phi) for phi in (0.0, 1.0, 3.0, 6.0)}
        assert len(gains) == 1

    def test_patch_cosine_power_law(self):
        n = 2.0
        p = AntennaPattern(kind=PATCH, peak_gain_dbi=5.0, shape_exponent=n)
        got = pattern_gain(p, math.radians(60.0), 0.0)
        assert got == pytest.approx(5.0 - 3.0103 * n, abs=1e-3)

    def test_patch_floor_behind(self):
        p = AntennaPattern(kind=PATCH, peak_gain_dbi=5.0)
        assert pattern_gain(p, math.radians(120.0), 0.0) == -60.0

    def test_relative_floor(self):
        p = AntennaPattern(kind=MONOPOLE, peak_gain_dbi=0.0, rel_floor_db=12.0)
        assert pattern_gain(p, 0.0, 0.0) == -12.0

    def test_angle_domain(self):
        p = AntennaPattern(kind=ISOTROPIC)
        with pytest.raises(DomainError):
            pattern_gain(p, -0.1, 0.0)


class TestLinkBudget:
    def test_worked_example(self):
        assert received_power_dbm(0.0, 0.0, 0.0, 5.0, 2.44e9) == pytest.approx(
            -54.2, abs=0.05
        )

    def test_doubling_distance_costs_six_db(self):
        a = received_power_dbm(0.0, 0.0, 0.0, 5.0, 2.44e9)
        b = received_power_dbm(0.0, 0.0, 0.0, 10.0, 2.44e9)
        assert a - b == pytest.approx(20.0 * math.log10(2.0), abs=1e-9)

    def test_fspl_positive_inputs(self):
        with pytest.raises(DomainError):
            free_space_path_loss_db(0.0, 2.4e9)


class TestFieldMap:
    def test_isotropic_constant(self):
        fm = field_map(AntennaPattern(kind=ISOTROPIC), 0.0, 5.0, STEP_10_DEG)
        assert fm.spread_db == 0.0
        assert np.allclose(fm.p_dbm, received_power_dbm(0.0, 0.0, 0.0, 5.0, 2.44e9))

    def test_spread_invariant_under_tx_shift(self):
        pat = AntennaPattern(kind=MONOPOLE, peak_gain_dbi=2.0)
        a = field_map(pat, 0.0, 5.0, STEP_10_DEG)
        b = field_map(pat, 7.0, 5.0, STEP_10_DEG)
        assert a.spread_db == pytest.approx(b.spread_db, abs=1e-12)

    def test_monopole_calibrated_to_measured_range(self):
        pat = calibrate_pattern("micaz")
        fm = field_map(pat, 0.0, 5.0, STEP_10_DEG)
        assert fm.p_dbm.max() == pytest.approx(-65.71, abs=1e-6)
        assert fm.p_dbm.min() == pytest.approx(-77.70, abs=1e-6)
        assert fm.spread_db == pytest.approx(12.0, abs=0.5)

    def test_patch_calibrated_to_measured_range(self):
        pat = calibrate_pattern("hc05")
        fm = field_map(pat, 0.0, 5.0, STEP_10_DEG)
        assert fm.p_dbm.max() == pytest.approx(-63.1, abs=1e-6)
        assert fm.p_dbm.min() == pytest.approx(-67.38, abs=1e-6)
        assert fm.spread_db == pytest.approx(4.28, abs=0.5)

    def test_grid_row_major_and_finite(self):
        fm = field_map(AntennaPattern(kind=PATCH), 0.0, 5.0, STEP_10_DEG)
        thetas = fm.grid[:, 0]
        assert np.all(np.diff(thetas) >= 0.0)
        assert np.all(np.isfinite(fm.grid))

    def test_step_must_divide_pi(self):
        with pytest.raises(DomainError, match="divide"):
            field_map(AntennaPattern(kind=ISOTROPIC), 0.0, 5.0, 1.0)

    def test_unknown_calibration_target(self):
        with pytest.raises(DomainError, match="micaz"):
            calibrate_pattern("zigzag")


class TestCoexistence:
    def test_hc05_indoor_severe(self):
        s = coexistence_lookup("hc05", "indoor", "severe")
        assert s.range_m == (10.0, 15.0)
        assert s.throughput_loss == (0.30, 0.50)
        assert s.interference_class == "considerable"

    def test_nrf24_any_low_loss(self):
        for scenario in ("indoor", "outdoor"):
            for interference in ("severe", "average", "none"):
                s = coexistence_lookup("nrf24", scenario, interference)
                assert s.throughput_loss[1] <= 0.20
                assert s.interference_class == "negligible"

    def test_hm10_worst_class(self):
        s = coexistence_lookup("hm10", "indoor", "severe")
        assert s.throughput_loss == (0.70, 0.80)
        assert s.interference_class == "worst"

    def test_outdoor_clear_band_capped_at_twenty_percent(self):
        s = coexistence_lookup("jdy30", "outdoor", "none")
        assert s.range_m == (30.0, 30.0)
        assert s.throughput_loss == (0.0, 0.20)

    def test_unknown_transceiver(self):
        with pytest.raises(DomainError, match="hc05"):
            coexistence_lookup("cc2650")

    def test_table_is_complete(self):
        assert set(COEXISTENCE_TABLE) == {"hc05", "jdy30", "hm10", "nrf24"}
        for entry in COEXISTENCE_TABLE.values():
            assert entry.indoor_same_floor_m[0] <= entry.indoor_same_floor_m[1]
            assert entry.loss_severe[1] >= entry.loss_average[1]


class TestPowerVsDistance:
    POINTS = [(1.0, 10e-3), (10.0, 20e-3)]

    def test_linear_midpoint(self):
        assert power_vs_distance(self.POINTS, 5.5) == pytest.approx(15e-3)

    def test_exact_at_calibration_point(self):
        assert power_vs_distance(self.POINTS, 10.0) == pytest.approx(20e-3)

    def test_extrapolation_uses_end_slope(self):
        slope = (20e-3 - 10e-3) / 9.0
        assert power_vs_distance(self.POINTS, 20.0) == pytest.approx(20e-3 + slope * 10.0)

    def test_non_monotone_rejected(self):
        with pytest.raises(DomainError, match="non-decreasing"):
            power_vs_distance([(1.0, 10e-3), (2.0, 5e-3)], 1.5)

    def test_duplicate_distance_rejected(self):
        with pytest.raises(DomainError, match="increasing"):
            power_vs_distance([(1.0, 1e-3), (1.0, 2e-3)], 1.5)

    @given(st.floats(0.1, 50.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_output(self, d):
        points = [(1.0, 5e-3), (4.0, 9e-3), (12.0, 9e-3), (30.0, 40e-3)]
        a = power_vs_distance(points, d)
        b = power_vs_distance(points, d + 0.5)
        assert b >= a - 1e-15
