import pytest

from hesskit import (
    BatterySpec,
    DomainError,
    PhaseSchedule,
    SizingConstraints,
    SwitchSpec,
    deliverable_window_energy,
    design_hess,
    min_sc_energy,
    preset_schedule,
    sense_defaults,
    size_supercap,
)
from hesskit.errors import SizingError
from hesskit.profiles import DEFAULT_BOUNDS_S

CONSTRAINTS = SizingConstraints()
W_E1 = 204.703e-6


class TestMinEnergy:
    def test_default_fraction(self):
        assert min_sc_energy(100e-6, CONSTRAINTS) == pytest.approx(133.33e-6, rel=1e-3)

    def test_worked_value(self):
        assert min_sc_energy(W_E1, CONSTRAINTS) == pytest.approx(272.94e-6, rel=1e-3)

    def test_fraction_one_rejected_at_construction(self):
        with pytest.raises(DomainError):
            SizingConstraints(delivery_fraction=1.0)

    def test_non_positive_energy_rejected(self):
        with pytest.raises(DomainError):
            min_sc_energy(0.0, CONSTRAINTS)


class TestSizeSupercap:
    def test_exact_coefficient(self):
        assert size_supercap(W_E1, CONSTRAINTS) == pytest.approx(56.16e-6, rel=1e-3)

    def test_published_coefficient(self):
        c = size_supercap(W_E1, CONSTRAINTS, paper_literal=True)
        assert c == pytest.approx(56.02e-6, rel=1e-3)

    def test_coefficient_gap_quarter_percent(self):
        exact = size_supercap(W_E1, CONSTRAINTS)
        lit = size_supercap(W_E1, CONSTRAINTS, paper_literal=True)
        assert (exact - lit) / exact == pytest.approx(0.0025, abs=5e-4)

    def test_inversion_to_small_cap(self):
        # burst energy that the published coefficient maps to 0.6 uF
        w = 0.6e-6 * (3.6**2 - 1.8**2) / 2.66
        assert w == pytest.approx(2.193e-6, rel=1e-2)
        assert size_supercap(w, CONSTRAINTS, paper_literal=True) == pytest.approx(0.6e-6)

    def test_window_scaling(self):
        doubled = SizingConstraints(v_min=3.6, v_max=7.2)
        assert size_supercap(W_E1, doubled) == pytest.approx(
            size_supercap(W_E1, CONSTRAINTS) / 4.0, rel=1e-12
        )

    def test_linear_in_energy(self):
        assert size_supercap(2 * W_E1, CONSTRAINTS) == pytest.approx(
            2 * size_supercap(W_E1, CONSTRAINTS), rel=1e-12
        )

    def test_roundtrip_with_window_energy(self):
        from hesskit import SupercapSpec

        spec = SupercapSpec(capacitance_f=33e-6, v_min=1.8, v_max=3.6)
        w = deliverable_window_energy(spec) * CONSTRAINTS.delivery_fraction
        assert size_supercap(w, CONSTRAINTS) == pytest.approx(
            spec.capacitance_f, rel=1e-9
        )


class TestDesignPipeline:
    def test_default_design(self, hc05_design):
        assert hc05_design.supercap.capacitance_f == pytest.approx(56.16e-6, rel=1e-3)
        assert hc05_design.feasibility.verdict == "SUFFICIENT"
        assert hc05_design.w_e1_j == pytest.approx(W_E1, rel=1e-9)

    def test_delivery_constraint_by_construction(self, hc05_design):
        window = deliverable_window_energy(hc05_design.supercap)
        assert window * CONSTRAINTS.delivery_fraction == pytest.approx(
            hc05_design.w_e1_j, rel=1e-9
        )

    def test_zero_burst_rejected(self):
        dead = PhaseSchedule(bounds_s=DEFAULT_BOUNDS_S, levels_v=(0.0, 0.0, 0.0, 0.0))
        with pytest.raises(SizingError, match="nothing to size"):
            design_hess(
                dead, sense_defaults("hc05"), BatterySpec(), SwitchSpec(), CONSTRAINTS
            )

    def test_slow_battery_insufficient(self):
        design = design_hess(
            preset_schedule("hc05"),
            sense_defaults("hc05"),
            BatterySpec(v_oc=4.2, r_ib_ohm=1000.0),
            SwitchSpec(),
            CONSTRAINTS,
        )
        assert design.feasibility.verdict == "INSUFFICIENT"
        assert 1.8 < design.feasibility.achieved_v < 3.6
        assert design.feasibility.required_window_s > design.feasibility.window_s

    def test_deterministic_provenance(self):
        args = (
            preset_schedule("hc05"),
            sense_defaults("hc05"),
            BatterySpec(),
            SwitchSpec(),
            CONSTRAINTS,
        )
        a = design_hess(*args)
        b = design_hess(*args)
        assert a.provenance == b.provenance
        assert a.supercap == b.supercap

    def test_conservative_burst_selection(self):
        design = design_hess(
            preset_schedule("hc05"),
            sense_defaults("hc05"),
            BatterySpec(),
            SwitchSpec(),
            CONSTRAINTS,
            burst_phases=("T1", "T4"),
        )
        assert design.w_e1_j == pytest.approx(204.703e-6 + 106.703e-6, rel=1e-9)
        assert design.supercap.capacitance_f > 56.16e-6

    def test_unknown_burst_phase(self):
        with pytest.raises(DomainError, match="T7"):
            design_hess(
                preset_schedule("hc05"),
                sense_defaults("hc05"),
                BatterySpec(),
                SwitchSpec(),
                CONSTRAINTS,
                burst_phases=("T7",),
            )

    def test_provenance_covers_every_step(self, hc05_design):
        tags = {e.tag for e in hc05_design.provenance}
        assert {
            "burst_energy",
            "min_window_energy",
            "capacitance",
            "loop_resistance",
            "recharge_tau",
            "recharge_voltage_at_window_end",
        } <= tags
