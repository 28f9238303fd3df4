"""Sense-resistor trace analysis.

A transceiver's supply current is measured as the voltage drop across a
small series resistor, sampled at a fixed rate.  This module turns such a
record into currents, powers, session energy, spike statistics, phase
segmentation and energy-per-character figures.

Conventions: every quantity is SI (volts, amperes, watts, joules, seconds)
unless the name says otherwise.  The raw record always stores sense voltage;
current and power are derived on demand so the record stays bit-faithful to
the acquisition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsegmentableError

DEFAULT_R_SENSE_OHM = 12.22
DEFAULT_SAMPLE_RATE_SPS = 250_000.0

# Multiplier applied to the estimated active-max current to obtain the
# default spike detection threshold.
SPIKE_THRESHOLD_FACTOR = 1.2


@dataclass(frozen=True)
class SenseConfig:
    """Acquisition metadata for a sense-resistor measurement.

    r_sense_ohm      series sense resistance
    v_supply_v       stabilized supply voltage feeding the transceiver
    sample_rate_sps  samples per second of the acquisition
    """

    r_sense_ohm: float = DEFAULT_R_SENSE_OHM
    v_supply_v: float = 5.0
    sample_rate_sps: float = DEFAULT_SAMPLE_RATE_SPS

    def __post_init__(self):
        if self.r_sense_ohm <= 0:
            raise DomainError(f"r_sense must be positive, got {self.r_sense_ohm}")
        if self.v_supply_v <= 0:
            raise DomainError(f"v_supply must be positive, got {self.v_supply_v}")
        if self.sample_rate_sps <= 0:
            raise DomainError(f"sample_rate must be positive, got {self.sample_rate_sps}")

    @property
    def dt_s(self) -> float:
        return 1.0 / self.sample_rate_sps


@dataclass(frozen=True)
class CurrentTrace:
    """A uniformly sampled sense-voltage record.

    Samples must satisfy 0 <= v < v_supply; a sample at or above the supply
    voltage cannot come from a series sense resistor and is rejected as a
    data error.  At least two samples are required so that one integration
    interval exists.
    """

    samples: np.ndarray
    config: SenseConfig
    label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1:
            raise DomainError("trace samples must be one-dimensional")
        if arr.size < 2:
            raise DomainError(f"trace needs at least 2 samples, got {arr.size}")
        bad = np.flatnonzero((arr < 0.0) | (arr >= self.config.v_supply_v))
        if bad.size:
            i = int(bad[0])
            raise DomainError(
                f"sample {i} = {arr[i]!r} V outside [0, v_supply={self.config.v_supply_v} V)"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        """Duration covered by the record, counting N samples as N intervals' start points."""
        return self.samples.size * self.config.dt_s

    def currents_a(self) -> np.ndarray:
        return self.samples / self.config.r_sense_ohm

    def powers_w(self) -> np.ndarray:
        v = self.samples
        return v * (self.config.v_supply_v - v) / self.config.r_sense_ohm


@dataclass(frozen=True)
class SpikeReport:
    """Outcome of spike cleaning: removed runs and the observed peak."""

    spike_intervals: tuple[tuple[int, int], ...]
    peak_current_a: float
    threshold_a: float

    def __post_init__(self):
        prev_end = -1
        for start, end in self.spike_intervals:
            if start > end or start <= prev_end:
                raise DomainError(f"spike intervals must be ordered and disjoint: {self.spike_intervals}")
            prev_end = end


@dataclass(frozen=True)
class EnergyReport:
    """Session energy figures for one analyzed trace.

    Mode is bookkeeping only: echo traffic transmits every received
    character back, which doubles radio activity per character, but the
    arithmetic here never changes with it.
    """

    total_energy_j: float
    per_phase_j: dict[str, float]
    spike_energy_j: float = 0.0
    mode: str = "no-echo"
    char_count: int | None = None
    energy_per_char_j: float | None = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.mode not in ("echo", "no-echo"):
            raise DomainError(f"mode must be 'echo' or 'no-echo', got {self.mode!r}")
        if self.total_energy_j < 0:
            raise DomainError("total energy must be non-negative")
        if not 0.0 <= self.spike_energy_j <= self.total_energy_j + 1e-18:
            raise DomainError(
                f"spike energy {self.spike_energy_j} outside [0, total={self.total_energy_j}]"
            )
        phase_sum = sum(self.per_phase_j.values())
        tol = 1e-9 * max(abs(self.total_energy_j), 1e-30)
        if abs(phase_sum - self.total_energy_j) > tol:
            raise DomainError(
                f"per-phase energies sum to {phase_sum}, expected {self.total_energy_j}"
            )


def current_from_voltage(v: float, config: SenseConfig) -> float:
    """Current through the sense resistor for one sample, i = v / R."""
    if not 0.0 <= v < config.v_supply_v:
        raise DomainError(f"sense voltage {v!r} V outside [0, v_supply={config.v_supply_v} V)")
    return v / config.r_sense_ohm


def transceiver_voltage(v: float, config: SenseConfig) -> float:
    """Effective voltage across the transceiver: supply minus the sense drop."""
    if not 0.0 <= v < config.v_supply_v:
        raise DomainError(f"sense voltage {v!r} V outside [0, v_supply={config.v_supply_v} V)")
    return config.v_supply_v - v


def transceiver_power(v: float, config: SenseConfig) -> float:
    """Instantaneous transceiver power, i * (v_supply - v).

    Expanding gives v*v_supply/R - v^2/R, a downward parabola with its
    maximum at v = v_supply/2.
    """
    return current_from_voltage(v, config) * (config.v_supply_v - v)


def level_for_power(p: float, config: SenseConfig) -> float:
    """Invert the power formula on the low-voltage branch.

    Returns the sense voltage v < v_supply/2 with transceiver_power(v) == p.
    Used to construct synthetic levels from target powers.
    """
    if p < 0:
        raise DomainError(f"power must be non-negative, got {p}")
    vs = config.v_supply_v
    disc = vs * vs - 4.0 * config.r_sense_ohm * p
    if disc < 0:
        raise DomainError(
            f"power {p} W exceeds the maximum {vs * vs / (4 * config.r_sense_ohm)} W "
            f"reachable through a {config.r_sense_ohm} ohm sense resistor"
        )
    return (vs - math.sqrt(disc)) / 2.0


def session_energy(trace: CurrentTrace) -> float:
    """Total session energy by trapezoidal integration of the power samples.

    N samples define N-1 intervals of width 1/sample_rate; each interval
    contributes the mean of its endpoint powers times the width.  Exact for
    power signals piecewise linear between samples.
    """
    p = trace.powers_w()
    return _trapezoid(p, trace.config.dt_s)


def _trapezoid(p: np.ndarray, dt: float) -> float:
    return float(np.sum((p[:-1] + p[1:]) * 0.5) * dt)


def _energy_between(trace: CurrentTrace, start: int, stop: int) -> float:
    """Trapezoid over the sample index range [start, stop] inclusive."""
    p = trace.powers_w()[start : stop + 1]
    return _trapezoid(p, trace.config.dt_s)


def energy_per_char(energy_j: float, char_count: int) -> float:
    """Plain division: session energy over number of characters moved.

    Reports always state this definition explicitly because published
    per-character figures for the same sessions do not reproduce from any
    unit reading of total/count.
    """
    if char_count <= 0:
        raise DomainError(f"char_count must be positive, got {char_count}")
    return energy_j / char_count


def default_spike_threshold(trace: CurrentTrace, factor: float = SPIKE_THRESHOLD_FACTOR) -> float:
    """Default cleaning threshold: factor times the active-max level current.

    The active-max level is estimated as the 90th percentile of sample
    currents, which tracks the top sustained level while staying blind to
    narrow commutation spikes.
    """
    return factor * float(np.percentile(trace.currents_a(), 90))


def find_spike_runs(trace: CurrentTrace, threshold_a: float) -> list[tuple[int, int]]:
    """Maximal runs of samples whose current strictly exceeds the threshold."""
    above = trace.currents_a() > threshold_a
    runs: list[tuple[int, int]] = []
    idx = np.flatnonzero(above)
    if idx.size == 0:
        return runs
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    for s, e in zip(starts, ends):
        runs.append((int(idx[s]), int(idx[e])))
    return runs


def clean_spikes(
    trace: CurrentTrace, threshold_a: float, max_width_s: float
) -> tuple[CurrentTrace, SpikeReport]:
    """Remove commutation spikes narrower than max_width_s.

    Each qualifying run is replaced by linear interpolation between the
    samples just outside it (runs touching a trace edge are filled flat from
    the single available anchor).  Runs wider than max_width_s are left in
    place and not reported.  The input trace is never modified.
    """
    if threshold_a <= 0:
        raise DomainError(f"spike threshold must be positive, got {threshold_a}")
    runs = [
        (s, e)
        for s, e in find_spike_runs(trace, threshold_a)
        if (e - s + 1) * trace.config.dt_s <= max_width_s
    ]
    if not runs:
        report = SpikeReport(spike_intervals=(), peak_current_a=0.0, threshold_a=threshold_a)
        return trace, report

    v = np.array(trace.samples, dtype=float)
    currents = trace.currents_a()
    peak = max(float(currents[s : e + 1].max()) for s, e in runs)
    n = v.size
    for s, e in runs:
        left = v[s - 1] if s > 0 else None
        right = v[e + 1] if e + 1 < n else None
        if left is None and right is None:
            continue  # whole trace above threshold yet narrow; nothing to anchor on
        if left is None:
            v[s : e + 1] = right
        elif right is None:
            v[s : e + 1] = left
        else:
            # interpolate across the run, anchors at s-1 and e+1
            span = (e + 1) - (s - 1)
            ks = np.arange(1, e - s + 2)
            v[s : e + 1] = left + (right - left) * ks / span
    cleaned = CurrentTrace(samples=v, config=trace.config, label=trace.label)
    report = SpikeReport(
        spike_intervals=tuple(runs), peak_current_a=peak, threshold_a=threshold_a
    )
    return cleaned, report


def segment_phases(trace: CurrentTrace, level_tolerance_v: float):
    """Split a trace into maximal runs of near-constant sense voltage.

    A sample extends the current run while it stays within level_tolerance_v
    of the run's running mean.  Four runs map onto the T1..T4 phase naming;
    any other count yields a generic multi-phase schedule.

    Raises UnsegmentableError (carrying the level histogram) when fewer than
    two distinct levels are present.
    """
    from .profiles import PhaseSchedule  # deferred: profiles imports this module

    if level_tolerance_v <= 0:
        raise DomainError(f"level tolerance must be positive, got {level_tolerance_v}")
    v = trace.samples
    runs: list[tuple[int, int, float]] = []  # (start, end, mean)
    start = 0
    mean = float(v[0])
    count = 1
    for i in range(1, v.size):
        x = float(v[i])
        if abs(x - mean) <= level_tolerance_v:
            count += 1
            mean += (x - mean) / count
        else:
            runs.append((start, i - 1, mean))
            start, mean, count = i, x, 1
    runs.append((start, v.size - 1, mean))

    # Cluster run means to count distinct levels.
    distinct: list[float] = []
    histogram: dict[float, int] = {}
    for s, e, m in runs:
        for lv in distinct:
            if abs(m - lv) <= level_tolerance_v:
                histogram[lv] += e - s + 1
                break
        else:
            distinct.append(m)
            histogram[m] = e - s + 1
    if len(distinct) < 2:
        raise UnsegmentableError(
            f"trace holds {len(distinct)} distinct level(s); need at least 2",
            histogram={round(k, 6): n for k, n in histogram.items()},
        )

    dt = trace.config.dt_s
    bounds = tuple((e + 1) * dt for _, e, _ in runs)
    levels = tuple(m for _, _, m in runs)
    return PhaseSchedule(bounds_s=bounds, levels_v=levels)


@dataclass(frozen=True)
class TraceAnalysis:
    """Everything the analyze pipeline produced for one trace."""

    report: EnergyReport
    spike_report: SpikeReport | None
    schedule: object | None  # PhaseSchedule when segmentation succeeded
    cleaned_trace: CurrentTrace | None


def analyze_trace(
    trace: CurrentTrace,
    *,
    clean: bool = False,
    spike_threshold_a: float | None = None,
    max_spike_width_s: float = 100e-6,
    level_tolerance_v: float = 0.05,
    char_count: int | None = None,
    mode: str = "no-echo",
) -> TraceAnalysis:
    """Run the full analysis pipeline on one trace.

    With clean=True the session is integrated after spike removal and the
    removed energy is reported separately; otherwise spike energy is zero by
    definition.  Segmentation is best effort: an unsegmentable trace reports
    a single ALL phase.
    """
    raw_energy = session_energy(trace)
    spike_report = None
    cleaned = None
    working = trace
    spike_energy = 0.0
    if clean:
        threshold = spike_threshold_a or default_spike_threshold(trace)
        cleaned, spike_report = clean_spikes(trace, threshold, max_spike_width_s)
        spike_energy = max(0.0, raw_energy - session_energy(cleaned))
        working = cleaned

    notes = [
        "energy_per_char is total session energy divided by character count",
    ]
    schedule = None
    per_phase: dict[str, float]
    try:
        schedule = segment_phases(working, level_tolerance_v)
        per_phase = {}
        dt = working.config.dt_s
        prev_idx = 0
        for pid, bound in zip(schedule.phase_ids, schedule.bounds_s):
            idx = min(int(round(bound / dt)) - 1, len(working) - 1)
            per_phase[pid] = _energy_between(working, prev_idx, idx)
            prev_idx = idx
        # index-range trapezoids share boundary samples, so they sum to the total
        total = session_energy(working)
        drift = total - sum(per_phase.values())
        last = schedule.phase_ids[-1]
        per_phase[last] += drift
    except UnsegmentableError:
        total = session_energy(working)
        per_phase = {"ALL": total}
        notes.append("trace not segmentable into phases; reported as one interval")

    epc = energy_per_char(total + spike_energy, char_count) if char_count else None
    report = EnergyReport(
        total_energy_j=total + spike_energy if clean else total,
        per_phase_j=_rebalance(per_phase, spike_energy) if clean else per_phase,
        spike_energy_j=spike_energy,
        mode=mode,
        char_count=char_count,
        energy_per_char_j=epc,
        notes=tuple(notes),
    )
    return TraceAnalysis(report=report, spike_report=spike_report, schedule=schedule, cleaned_trace=cleaned)


def _rebalance(per_phase: dict[str, float], spike_energy: float) -> dict[str, float]:
    """Add removed spike energy as its own entry so phases still sum to total."""
    if spike_energy == 0.0:
        return per_phase
    out = dict(per_phase)
    out["SPIKES"] = spike_energy
    return out
