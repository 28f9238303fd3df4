"""Report and file emission.

All delimited outputs are UTF-8 CSV.  Metric reports use the header
``metric,value,unit``; waveforms use a fixed column set with the energy
ledger appended as ``#`` comment lines; field maps are plot-ready
``theta_rad,phi_rad,r_m,p_dbm`` tables.  Outputs are byte-stable across
runs except for the optional timestamp header, which callers can disable.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import TraceFormatError
from .rf import FieldMap
from .sim import SimulationResult
from .sizing import HessDesign
from .traces import CurrentTrace, SenseConfig, TraceAnalysis


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _header_lines(timestamp: bool) -> list[str]:
    if not timestamp:
        return []
    return [f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}"]


def write_metrics_csv(
    path: str | Path, rows: list[tuple[str, object, str]], timestamp: bool = True
) -> None:
    lines = _header_lines(timestamp)
    lines.append("metric,value,unit")
    for metric, value, unit in rows:
        lines.append(f"{metric},{_fmt(value)},{unit}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_text_report(path: str | Path, lines: list[str], timestamp: bool = True) -> None:
    head = []
    if timestamp:
        head.append(f"generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}")
        head.append("")
    Path(path).write_text("\n".join(head + lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Trace files: header `index,voltage_v`, one sample per row.
# ---------------------------------------------------------------------------


def write_trace_csv(path: str | Path, trace: CurrentTrace) -> None:
    lines = ["index,voltage_v"]
    for i, v in enumerate(trace.samples):
        lines.append(f"{i},{_fmt(float(v))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path: str | Path, config: SenseConfig, label: str = "") -> CurrentTrace:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(f"cannot read trace: {exc}") from None
    lines = text.splitlines()
    if not lines or lines[0].strip() != "index,voltage_v":
        raise TraceFormatError("missing header 'index,voltage_v'", line=1)
    samples = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceFormatError(f"expected 'index,voltage': {line!r}", line=lineno)
        try:
            int(parts[0])
            samples.append(float(parts[1]))
        except ValueError:
            raise TraceFormatError(f"malformed row: {line!r}", line=lineno) from None
    if len(samples) < 2:
        raise TraceFormatError("trace needs at least 2 samples")
    return CurrentTrace(samples=np.asarray(samples), config=config, label=label or str(p))


# ---------------------------------------------------------------------------
# Analyze report.
# ---------------------------------------------------------------------------


def analysis_metric_rows(analysis: TraceAnalysis) -> list[tuple[str, object, str]]:
    rep = analysis.report
    rows: list[tuple[str, object, str]] = [
        ("total_energy", rep.total_energy_j, "J"),
        ("mode", rep.mode, ""),
    ]
    for pid in sorted(rep.per_phase_j):
        rows.append((f"energy_{pid}", rep.per_phase_j[pid], "J"))
    rows.append(("spike_energy", rep.spike_energy_j, "J"))
    if rep.char_count is not None:
        rows.append(("char_count", rep.char_count, ""))
        rows.append(("energy_per_char", rep.energy_per_char_j, "J/char"))
    if analysis.spike_report is not None:
        sr = analysis.spike_report
        rows.append(("spike_intervals", len(sr.spike_intervals), ""))
        rows.append(("spike_peak_current", sr.peak_current_a, "A"))
        rows.append(("spike_threshold", sr.threshold_a, "A"))
    return rows


def analysis_text_lines(analysis: TraceAnalysis, label: str = "") -> list[str]:
    rep = analysis.report
    lines = [f"trace analysis{': ' + label if label else ''}", "-" * 40]
    lines.append(f"mode:            {rep.mode}")
    lines.append(f"total energy:    {rep.total_energy_j * 1e6:.3f} uJ")
    for pid in sorted(rep.per_phase_j):
        lines.append(f"  {pid:<8} {rep.per_phase_j[pid] * 1e6:12.3f} uJ")
    if rep.spike_energy_j:
        lines.append(f"spike energy:    {rep.spike_energy_j * 1e6:.3f} uJ")
    if rep.char_count is not None:
        lines.append(f"characters:      {rep.char_count}")
        lines.append(f"energy per char: {rep.energy_per_char_j * 1e6:.4f} uJ/char")
    for note in rep.notes:
        lines.append(f"note: {note}")
    return lines


# ---------------------------------------------------------------------------
# Design report.
# ---------------------------------------------------------------------------


def design_metric_rows(design: HessDesign) -> list[tuple[str, object, str]]:
    rows: list[tuple[str, object, str]] = []
    for entry in design.provenance:
        rows.append((entry.tag, entry.value, entry.unit))
    rows.append(("verdict", design.feasibility.verdict, ""))
    rows.append(("battery_v_oc", design.battery.v_oc, "V"))
    rows.append(("battery_r_ib", design.battery.r_ib_ohm, "ohm"))
    rows.append(("supercap_capacitance", design.supercap.capacitance_f, "F"))
    rows.append(("supercap_esr", design.supercap.esr_ohm, "ohm"))
    rows.append(("window_v_min", design.supercap.v_min, "V"))
    rows.append(("window_v_max", design.supercap.v_max, "V"))
    rows.append(("switch_r_on", design.switch.r_on_ohm, "ohm"))
    for pid in design.schedule.phase_ids:
        rows.append((f"load_energy_{pid}", design.phase_energies_j[pid], "J"))
    return rows


def design_text_lines(design: HessDesign) -> list[str]:
    feas = design.feasibility
    lines = ["hybrid supply design", "-" * 40]
    lines.append(f"burst energy:        {design.w_e1_j * 1e6:.3f} uJ")
    lines.append(f"delivery fraction:   {design.constraints.delivery_fraction}")
    lines.append(
        f"capacitance:         {design.supercap.capacitance_f * 1e6:.4f} uF"
        + ("  (published rounded coefficient)" if design.paper_literal else "")
    )
    lines.append(
        f"window:              [{design.supercap.v_min}, {design.supercap.v_max}] V"
    )
    lines.append(f"recharge window:     {feas.window_s * 1e6:.1f} us")
    lines.append(f"achieved voltage:    {feas.achieved_v:.4f} V")
    lines.append(f"verdict:             {feas.verdict}")
    if not feas.sufficient:
        lines.append(
            f"  window needed:     {feas.required_window_s * 1e6:.1f} us at this loop resistance"
        )
        lines.append(
            f"  max loop resist.:  {feas.max_loop_resistance_ohm:.4f} ohm within this window"
        )
    lines.append("")
    lines.append("intermediates:")
    for entry in design.provenance:
        note = f"  ({entry.note})" if entry.note else ""
        lines.append(f"  {entry.tag:<32} {_fmt(entry.value):>16} {entry.unit}{note}")
    return lines


# ---------------------------------------------------------------------------
# Waveforms and field maps.
# ---------------------------------------------------------------------------

WAVEFORM_HEADER = "t_s,v_sc_v,i_batt_a,i_sc_a,i_load_a,p_load_w"


def write_waveform_csv(
    path: str | Path, result: SimulationResult, timestamp: bool = True
) -> None:
    lines = _header_lines(timestamp)
    lines.append(WAVEFORM_HEADER)
    cols = (result.t_s, result.v_sc, result.i_batt, result.i_sc, result.i_load, result.p_load)
    for row in zip(*cols):
        lines.append(",".join(_fmt(float(x)) for x in row))
    led = result.ledger
    lines.append(f"# source_energy_j={_fmt(led.source_j)}")
    lines.append(f"# load_energy_j={_fmt(led.load_j)}")
    lines.append(f"# dissipated_energy_j={_fmt(led.dissipated_j)}")
    lines.append(f"# delta_stored_j={_fmt(led.delta_stored_j)}")
    if led.harvest_j:
        lines.append(f"# harvest_energy_j={_fmt(led.harvest_j)}")
    lines.append(f"# relative_imbalance={_fmt(led.imbalance())}")
    lines.append(f"# steady_state_cycle={result.steady_state_cycle}")
    if result.brown_out_time_s is not None:
        lines.append(f"# brown_out_t_s={_fmt(result.brown_out_time_s)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


FIELDMAP_HEADER = "theta_rad,phi_rad,r_m,p_dbm"


def write_fieldmap_csv(path: str | Path, fmap: FieldMap, timestamp: bool = True) -> None:
    lines = _header_lines(timestamp)
    lines.append(FIELDMAP_HEADER)
    for theta, phi, r, p in fmap.grid:
        lines.append(f"{_fmt(float(theta))},{_fmt(float(phi))},{_fmt(float(r))},{_fmt(float(p))}")
    lines.append(f"# spread_db={_fmt(fmap.spread_db)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
