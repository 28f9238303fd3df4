"""Hybrid storage building blocks: battery, super-capacitor, analogue switches.

The battery is an ideal voltage source in series with its internal
resistance; the super-capacitor is an ideal capacitance behind its ESR.
Recharge analysis uses the standard first-order RC solution through the
series loop resistance, clipped at the capacitor's rated ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import DomainError

# Li-Ion terminal voltage window: the low end marks 0% state of charge,
# the high end 100%.
LI_ION_V_SOC0 = 3.6
LI_ION_V_SOC100 = 4.2

# Transceiver supply window.  1.6 V is the absolute operating floor (below
# it the radio browns out); designs use a 1.8 V working floor, half of the
# 3.6 V ceiling, as margin.
TRANSCEIVER_FLOOR_V = 1.6
DEFAULT_SC_V_MIN = 1.8
DEFAULT_SC_V_MAX = 3.6

DEFAULT_SWITCH_R_ON = 0.3
DEFAULT_SC_ESR = 0.05


@dataclass(frozen=True)
class BatterySpec:
    v_oc: float = LI_ION_V_SOC100
    r_ib_ohm: float = 1.0
    v_soc0: float = LI_ION_V_SOC0
    v_soc100: float = LI_ION_V_SOC100

    def __post_init__(self):
        if self.r_ib_ohm <= 0:
            raise DomainError(f"battery internal resistance must be positive, got {self.r_ib_ohm}")
        if not self.v_soc0 < self.v_soc100:
            raise DomainError(
                f"state-of-charge window is empty: [{self.v_soc0}, {self.v_soc100}]"
            )


@dataclass(frozen=True)
class SupercapSpec:
    capacitance_f: float
    esr_ohm: float = DEFAULT_SC_ESR
    v_min: float = DEFAULT_SC_V_MIN
    v_max: float = DEFAULT_SC_V_MAX

    def __post_init__(self):
        if self.capacitance_f <= 0:
            raise DomainError(f"capacitance must be positive, got {self.capacitance_f}")
        if self.esr_ohm < 0:
            raise DomainError(f"ESR must be non-negative, got {self.esr_ohm}")
        if not 0 < self.v_min < self.v_max:
            raise DomainError(f"voltage window is invalid: [{self.v_min}, {self.v_max}]")


@dataclass(frozen=True)
class SwitchSpec:
    r_on_ohm: float = DEFAULT_SWITCH_R_ON
    control_v_min: float = 1.6
    control_v_max: float = 3.6

    def __post_init__(self):
        if self.r_on_ohm < 0:
            raise DomainError(f"switch on-resistance must be non-negative, got {self.r_on_ohm}")


class Topology:
    """Enumerated per-phase power routes."""

    SC_TO_LOAD = "sc_to_load"
    BATTERY_TO_LOAD = "battery_to_load"
    BATTERY_RECHARGES_SC = "battery_recharges_sc"
    IDLE = "idle"

    ALL = (SC_TO_LOAD, BATTERY_TO_LOAD, BATTERY_RECHARGES_SC, IDLE)


@dataclass(frozen=True)
class CircuitPhase:
    """One phase's resolved equivalent circuit.

    battery_recharges_sc keeps the battery on the load while also feeding
    the capacitor branch; the other topologies are single-source.
    """

    topology: str
    active_switches: frozenset[str]
    load_resistance_ohm: float  # math.inf models an open (zero-level) load

    def __post_init__(self):
        if self.topology not in Topology.ALL:
            raise DomainError(f"unknown topology {self.topology!r}")
        if self.load_resistance_ohm <= 0:
            raise DomainError("load resistance must be positive (use inf for an open load)")


def sc_stored_energy(capacitance_f: float, voltage_v: float) -> float:
    """Energy held by a capacitor at a given voltage: C * U^2 / 2."""
    if capacitance_f <= 0:
        raise DomainError(f"capacitance must be positive, got {capacitance_f}")
    if voltage_v < 0:
        raise DomainError(f"voltage must be non-negative, got {voltage_v}")
    return 0.5 * capacitance_f * voltage_v * voltage_v


def deliverable_window_energy(spec: SupercapSpec) -> float:
    """Energy released sweeping the capacitor from v_max down to v_min."""
    return 0.5 * spec.capacitance_f * (spec.v_max**2 - spec.v_min**2)


def loop_resistance(battery: BatterySpec, sc: SupercapSpec, switch: SwitchSpec) -> float:
    """Series resistance of the recharge loop: battery + ESR + switch."""
    return battery.r_ib_ohm + sc.esr_ohm + switch.r_on_ohm


class RechargeCurrentSplit(NamedTuple):
    current_a: float
    negative: bool  # the published expression can go negative when ESR dominates


def recharge_current_paper(i_b_a: float, sc: SupercapSpec, r_ib_t3_ohm: float) -> RechargeCurrentSplit:
    """Published limit expression for the capacitor share of battery current.

    i_sc = (1 - ESR / R_IB) * i_b.  Kept for report annotation only; the
    simulator computes branch currents from the mesh instead.  The result
    flags the unphysical negative regime (ESR larger than the battery
    resistance) rather than raising.
    """
    if r_ib_t3_ohm <= 0:
        raise DomainError(f"battery resistance must be positive, got {r_ib_t3_ohm}")
    val = (1.0 - sc.esr_ohm / r_ib_t3_ohm) * i_b_a
    return RechargeCurrentSplit(current_a=val, negative=val < 0)


@dataclass(frozen=True)
class RechargeTrajectory:
    """Closed-form capacitor voltage during a battery recharge.

    v(t) = v_oc - (v_oc - v_start) * exp(-t / (R_E * C)), clipped at the
    capacitor ceiling.  Value-semantic: a frozen bundle of constants, safe
    to share between threads.
    """

    v_oc: float
    v_start: float
    tau_s: float
    v_max: float
    t_span_s: float

    def voltage_at(self, t_s: float) -> float:
        if t_s < 0:
            raise DomainError(f"time must be non-negative, got {t_s}")
        v = self.v_oc - (self.v_oc - self.v_start) * math.exp(-t_s / self.tau_s)
        return min(v, self.v_max)

    __call__ = voltage_at

    def time_to_reach(self, v_target: float) -> float:
        """Time to first reach v_target; inf when the source cannot get there."""
        if v_target <= self.v_start:
            return 0.0
        if v_target >= self.v_oc:
            return math.inf
        return self.tau_s * math.log((self.v_oc - self.v_start) / (self.v_oc - v_target))


def sc_recharge_trajectory(
    battery: BatterySpec,
    sc: SupercapSpec,
    switch: SwitchSpec,
    v_start: float,
    t_span_s: float,
) -> RechargeTrajectory:
    """RC charging law for the capacitor through the series loop."""
    if not 0.0 <= v_start <= sc.v_max:
        raise DomainError(f"start voltage {v_start} outside [0, v_max={sc.v_max}]")
    if t_span_s <= 0:
        raise DomainError(f"time span must be positive, got {t_span_s}")
    tau = loop_resistance(battery, sc, switch) * sc.capacitance_f
    return RechargeTrajectory(
        v_oc=battery.v_oc, v_start=v_start, tau_s=tau, v_max=sc.v_max, t_span_s=t_span_s
    )


def sc_recharge_voltage_literal(
    battery: BatterySpec,
    sc: SupercapSpec,
    switch: SwitchSpec,
    v_start: float,
    t_s: float,
) -> float:
    """Published recharge expression taken literally, for annotation only.

    The printed form scales the accumulated charge by 1/(R_E*C) instead of
    1/C, so it adds a current-dimensioned term to a voltage and is not
    dimensionally consistent.  It is evaluated (never clipped, never used by
    the simulator) so reports can show it next to the consistent value.
    """
    traj = sc_recharge_trajectory(battery, sc, switch, v_start, max(t_s, 1e-12))
    r_e = loop_resistance(battery, sc, switch)
    # integral of the loop current up to t equals C * (v(t) - v_start)
    charge = sc.capacitance_f * (
        (traj.v_oc - (traj.v_oc - v_start) * math.exp(-t_s / traj.tau_s)) - v_start
    )
    return v_start + charge / (r_e * sc.capacitance_f)


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Outcome of the recharge-window check.

    When insufficient, both corrective directions are quantified: the window
    length that would succeed at the given loop resistance, and the largest
    loop resistance that would succeed within the given window.
    """

    sufficient: bool
    achieved_v: float
    window_s: float
    required_window_s: float
    max_loop_resistance_ohm: float

    @property
    def verdict(self) -> str:
        return "SUFFICIENT" if self.sufficient else "INSUFFICIENT"


def recharge_feasible(
    battery: BatterySpec,
    sc: SupercapSpec,
    switch: SwitchSpec,
    v_start: float,
    window_s: float,
) -> FeasibilityVerdict:
    """Can the battery restore the capacitor to v_max within the window?"""
    if window_s <= 0:
        raise DomainError(f"window must be positive, got {window_s}")
    traj = sc_recharge_trajectory(battery, sc, switch, v_start, window_s)
    achieved = traj.voltage_at(window_s)
    required = traj.time_to_reach(sc.v_max)
    if battery.v_oc > sc.v_max and v_start < sc.v_max:
        # largest R_E that still reaches v_max in window_s
        max_re = window_s / (
            sc.capacitance_f * math.log((battery.v_oc - v_start) / (battery.v_oc - sc.v_max))
        )
    elif v_start >= sc.v_max:
        max_re = math.inf
    else:
        max_re = 0.0  # source below the ceiling: no resistance makes it
    return FeasibilityVerdict(
        sufficient=achieved >= sc.v_max,
        achieved_v=achieved,
        window_s=window_s,
        required_window_s=required,
        max_loop_resistance_ohm=max_re,
    )


def soc_from_voltage(battery: BatterySpec, v: float) -> float:
    """Linear state-of-charge map over the battery's voltage window."""
    if not battery.v_soc0 <= v <= battery.v_soc100:
        raise DomainError(
            f"voltage {v} outside the state-of-charge window "
            f"[{battery.v_soc0}, {battery.v_soc100}]"
        )
    return (v - battery.v_soc0) / (battery.v_soc100 - battery.v_soc0)
