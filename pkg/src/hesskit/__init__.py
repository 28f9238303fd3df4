"""Hybrid-storage sizing and simulation toolkit for wireless transceiver supplies."""

from .errors import (
    BrownOutError,
    ConfigError,
    DomainError,
    HesskitError,
    SizingError,
    TraceFormatError,
    UnsegmentableError,
)
from .hess import (
    BatterySpec,
    CircuitPhase,
    FeasibilityVerdict,
    SupercapSpec,
    SwitchSpec,
    Topology,
    deliverable_window_energy,
    loop_resistance,
    recharge_current_paper,
    recharge_feasible,
    sc_recharge_trajectory,
    sc_stored_energy,
    soc_from_voltage,
)
from .profiles import (
    PhaseSchedule,
    Spike,
    TransceiverPreset,
    make_schedule,
    phase_energies,
    preset,
    preset_names,
    preset_schedule,
    sense_defaults,
    synthesize_trace,
)
from .rf import (
    AntennaPattern,
    CoexistenceEntry,
    FieldMap,
    calibrate_pattern,
    coexistence_lookup,
    field_map,
    pattern_gain,
    power_vs_distance,
    received_power_dbm,
)
from .sim import (
    ChargePolicy,
    EnergyLedger,
    SimulationResult,
    StressMetrics,
    SwitchSchedule,
    battery_only_schedule,
    battery_smoothing_setup,
    battery_stress,
    default_switch_schedule,
    derive_circuit_loads,
    energy_balance,
    run_cycle,
    smoothing_policy,
    smoothing_switch_schedule,
)
from .sizing import (
    HessDesign,
    SizingConstraints,
    design_hess,
    min_sc_energy,
    size_supercap,
)
from .traces import (
    CurrentTrace,
    EnergyReport,
    SenseConfig,
    SpikeReport,
    analyze_trace,
    clean_spikes,
    current_from_voltage,
    energy_per_char,
    segment_phases,
    session_energy,
    transceiver_power,
    transceiver_voltage,
)

__version__ = "0.1.0"
