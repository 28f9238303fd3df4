"""Command-line front end.

Subcommands: analyze (trace -> energy report), size (config -> design
report), simulate (config -> waveforms + ledger), fieldmap and coexist
(RF models -> CSV).  Engineering verdicts (INSUFFICIENT design, brown-out)
are successful computations and exit 0; malformed inputs exit 2; anything
unexpected exits 1.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from . import plots, reports, rf, sim
from .config import RunConfig, load_config
from .errors import BrownOutError, HesskitError
from .hess import recharge_feasible
from .sizing import HessDesign, design_hess
from .traces import SenseConfig, analyze_trace

_ANTENNA_ALIASES = {
    "isotropic": rf.ISOTROPIC,
    "monopole": rf.MONOPOLE,
    "monopole_omni": rf.MONOPOLE,
    "patch": rf.PATCH,
    "patch_directional": rf.PATCH,
}


def _base_path(out: str) -> Path:
    p = Path(out)
    if p.suffix in (".csv", ".txt"):
        return p.with_suffix("")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hesskit",
        description="Hybrid-storage sizing and simulation for wireless transceiver supplies",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="analyze a sense-voltage trace CSV")
    pa.add_argument("--trace", required=True, help="trace CSV (header index,voltage_v)")
    pa.add_argument("--rsense", type=float, help="sense resistance [ohm]")
    pa.add_argument("--vs", type=float, help="supply voltage [V]")
    pa.add_argument("--fs", type=float, help="sample rate [sps]")
    pa.add_argument("--config", help="config file supplying the [sense] section")
    pa.add_argument("--clean-spikes", action="store_true")
    pa.add_argument("--spike-threshold-ma", type=float)
    pa.add_argument("--max-spike-width-us", type=float, default=100.0)
    pa.add_argument("--level-tolerance-v", type=float, default=0.05)
    pa.add_argument("--chars", type=int)
    pa.add_argument("--mode", choices=("echo", "no-echo"), default="no-echo")
    pa.add_argument("--out", help="report base path (writes .csv and .txt)")
    pa.add_argument("--no-timestamp", action="store_true")
    pa.add_argument("--plot", action="store_true", help="render a PNG next to the report")

    ps = sub.add_parser("size", help="size the hybrid supply from a config")
    ps.add_argument("--config", required=True)
    ps.add_argument("--paper-literal", action="store_true",
                    help="use the published rounded sizing coefficient 2.66 instead of exact 8/3")
    ps.add_argument("--out", help="report base path (writes .csv and .txt)")
    ps.add_argument("--no-timestamp", action="store_true")
    ps.add_argument("--plot", action="store_true")

    pm = sub.add_parser("simulate", help="time-step transmission cycles")
    pm.add_argument("--config", required=True)
    pm.add_argument("--dt", type=float, help="time step [s]")
    pm.add_argument("--cycles", type=int)
    pm.add_argument("--baseline", action="store_true",
                    help="also run the battery-only baseline and report stress metrics")
    pm.add_argument("--smoothing", action="store_true",
                    help="governed recharge spread over the battery-served phases")
    pm.add_argument("--paper-literal", action="store_true")
    pm.add_argument("--out", help="waveform CSV path")
    pm.add_argument("--no-timestamp", action="store_true")
    pm.add_argument("--plot", action="store_true")

    pf = sub.add_parser("fieldmap", help="full-sphere received-power map")
    pf.add_argument("--config", help="config file supplying the [rf] section")
    pf.add_argument("--antenna", choices=sorted(_ANTENNA_ALIASES))
    pf.add_argument("--calibrate-to", choices=sorted(rf.MEASURED_MAP_TARGETS),
                    help="fit offset and floor to a measured dBm range")
    pf.add_argument("--peak-gain-dbi", type=float)
    pf.add_argument("--exponent", type=float)
    pf.add_argument("--ptx-dbm", type=float)
    pf.add_argument("--distance-m", type=float)
    pf.add_argument("--freq-ghz", type=float)
    pf.add_argument("--step-deg", type=float)
    pf.add_argument("--out", help="field map CSV path")
    pf.add_argument("--no-timestamp", action="store_true")
    pf.add_argument("--plot", action="store_true")

    pc = sub.add_parser("coexist", help="band coexistence table lookup")
    pc.add_argument("--transceiver", required=True)
    pc.add_argument("--scenario", choices=("indoor", "outdoor"), default="indoor")
    pc.add_argument("--interference", choices=("severe", "average", "none"), default="severe")
    pc.add_argument("--out", help="CSV path")
    pc.add_argument("--no-timestamp", action="store_true")

    return ap


# ---------------------------------------------------------------------------


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config) if args.config else None
    rsense = args.rsense if args.rsense is not None else (cfg.get("sense", "r_sense_ohm") if cfg else None)
    vs = args.vs if args.vs is not None else (cfg.get("sense", "v_supply_v") if cfg else None)
    fs = args.fs if args.fs is not None else (cfg.get("sense", "sample_rate_sps") if cfg else None)
    missing = [name for name, val in (("--rsense", rsense), ("--vs", vs), ("--fs", fs)) if val is None]
    if missing:
        print(f"error: acquisition metadata required: {', '.join(missing)}", file=sys.stderr)
        return 2
    sense = SenseConfig(r_sense_ohm=rsense, v_supply_v=vs, sample_rate_sps=fs)
    trace = reports.read_trace_csv(args.trace, sense, label=Path(args.trace).name)
    analysis = analyze_trace(
        trace,
        clean=args.clean_spikes,
        spike_threshold_a=(args.spike_threshold_ma * 1e-3 if args.spike_threshold_ma else None),
        max_spike_width_s=args.max_spike_width_us * 1e-6,
        level_tolerance_v=args.level_tolerance_v,
        char_count=args.chars,
        mode=args.mode,
    )
    text = reports.analysis_text_lines(analysis, label=trace.label)
    if args.out:
        base = _base_path(args.out)
        reports.write_metrics_csv(base.with_suffix(".csv"),
                                  reports.analysis_metric_rows(analysis),
                                  timestamp=not args.no_timestamp)
        reports.write_text_report(base.with_suffix(".txt"), text,
                                  timestamp=not args.no_timestamp)
        if args.plot:
            plots.render_trace(trace, base.with_suffix(".png"), cleaned=analysis.cleaned_trace)
    else:
        print("\n".join(text))
    return 0


def _design_from_config(cfg: RunConfig, paper_literal: bool) -> HessDesign:
    design = design_hess(
        cfg.schedule(),
        cfg.sense_config(),
        cfg.battery(),
        cfg.switch(),
        cfg.constraints(),
        sc_esr_ohm=cfg.supercap_esr(),
        paper_literal=paper_literal or cfg.get("sizing", "paper_literal", False),
    )
    explicit = cfg.supercap()
    if explicit is not None:
        # an explicit capacitance overrides the sized one; re-verify recharge
        feas = recharge_feasible(
            design.battery, explicit, design.switch,
            v_start=explicit.v_min, window_s=design.feasibility.window_s,
        )
        design = dataclasses.replace(design, supercap=explicit, feasibility=feas)
    return design


def _cmd_size(args) -> int:
    cfg = load_config(args.config)
    design = _design_from_config(cfg, args.paper_literal)
    text = reports.design_text_lines(design)
    if args.out:
        base = _base_path(args.out)
        reports.write_metrics_csv(base.with_suffix(".csv"), reports.design_metric_rows(design),
                                  timestamp=not args.no_timestamp)
        reports.write_text_report(base.with_suffix(".txt"), text,
                                  timestamp=not args.no_timestamp)
        if args.plot:
            plots.render_recharge(design, base.with_suffix(".png"))
    else:
        print("\n".join(text))
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    design = _design_from_config(cfg, args.paper_literal)
    schedule = design.schedule
    dt = args.dt if args.dt is not None else cfg.get("sim", "dt_us", 0.5) * 1e-6
    cycles = args.cycles if args.cycles is not None else cfg.get("sim", "cycles", 10)
    smoothing = args.smoothing or cfg.get("sim", "smoothing", False)
    limit_ma = cfg.get("sim", "i_batt_limit_ma")
    v_start = cfg.get("sim", "v_start_v")

    harvest_w = cfg.get("sim", "harvest_mw", 0.0) * 1e-3
    loads = sim.derive_circuit_loads(design)
    if smoothing:
        switches = sim.smoothing_switch_schedule(schedule)
        limit = (limit_ma * 1e-3 if limit_ma is not None
                 else sim.smoothing_policy(design).i_batt_limit_a)
        policy = sim.ChargePolicy(limit, harvest_power_w=harvest_w)
    else:
        switches = sim.default_switch_schedule(schedule)
        policy = sim.ChargePolicy(limit_ma * 1e-3 if limit_ma is not None else None,
                                  harvest_power_w=harvest_w)

    brown_out = None
    try:
        result = sim.run_cycle(design, switches=switches, dt=dt, cycles=cycles,
                               policy=policy, v_start=v_start, loads=loads)
    except BrownOutError as exc:
        brown_out = exc
        result = exc.result

    out = Path(args.out) if args.out else None
    if out:
        reports.write_waveform_csv(out, result, timestamp=not args.no_timestamp)
        if args.plot:
            plots.render_simulation(result, out.with_suffix(".png"))
    led = result.ledger
    print(f"cycles: {len(result.cycle_ledgers)}  steady-state cycle: {result.steady_state_cycle}")
    print(f"ledger: source={led.source_j:.6e} J load={led.load_j:.6e} J "
          f"dissipated={led.dissipated_j:.6e} J stored-delta={led.delta_stored_j:.6e} J")
    print(f"relative imbalance: {led.imbalance():.3e}")
    if brown_out is not None:
        print(f"BROWN-OUT at t={brown_out.time_s * 1e6:.2f} us "
              f"(storage at {brown_out.voltage_v:.3f} V)")
        return 0

    if args.baseline:
        base_run = sim.run_cycle(design, switches=sim.battery_only_schedule(schedule),
                                 dt=dt, cycles=cycles, v_start=v_start, loads=loads)
        stress = sim.battery_stress(result, base_run)
        if out:
            stem = out.with_suffix("")
            reports.write_waveform_csv(Path(str(stem) + "_baseline.csv"), base_run,
                                       timestamp=not args.no_timestamp)
            reports.write_metrics_csv(Path(str(stem) + "_stress.csv"), [
                ("peak_battery_current", stress.peak_battery_current_a, "A"),
                ("baseline_peak_current", stress.baseline_peak_a, "A"),
                ("peak_ratio", stress.peak_ratio, ""),
                ("ripple_rms", stress.ripple_rms_a, "A"),
                ("baseline_ripple_rms", stress.baseline_ripple_rms_a, "A"),
                ("ripple_ratio", stress.ripple_ratio, ""),
            ], timestamp=not args.no_timestamp)
        print(f"stress: peak ratio {stress.peak_ratio:.4f}  ripple ratio {stress.ripple_ratio:.4f}")
    return 0


def _cmd_fieldmap(args) -> int:
    cfg = load_config(args.config) if args.config else None

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return cfg.get("rf", key, default) if cfg else default

    antenna = pick(args.antenna, "antenna", "isotropic")
    calibrate_to = pick(args.calibrate_to, "calibrate_to", None)
    p_tx = pick(args.ptx_dbm, "p_tx_dbm", 0.0)
    d_m = pick(args.distance_m, "distance_m", 5.0)
    f_hz = pick(args.freq_ghz, "freq_ghz", 2.44) * 1e9
    step = math.radians(pick(args.step_deg, "step_deg", 10.0))
    if antenna not in _ANTENNA_ALIASES:
        print(f"error: unknown antenna {antenna!r}", file=sys.stderr)
        return 2
    if calibrate_to:
        pattern = rf.calibrate_pattern(calibrate_to, p_tx_dbm=p_tx, d_m=d_m, f_hz=f_hz)
    else:
        pattern = rf.AntennaPattern(
            kind=_ANTENNA_ALIASES[antenna],
            peak_gain_dbi=pick(args.peak_gain_dbi, "peak_gain_dbi", 0.0),
            shape_exponent=pick(args.exponent, "shape_exponent", 1.0),
        )
    fmap = rf.field_map(pattern, p_tx_dbm=p_tx, d_m=d_m, angular_step_rad=step, f_hz=f_hz)
    if args.out:
        reports.write_fieldmap_csv(args.out, fmap, timestamp=not args.no_timestamp)
        if args.plot:
            plots.render_fieldmap(fmap, Path(args.out).with_suffix(".png"))
    print(f"pattern: {fmap.pattern.kind}  points: {fmap.grid.shape[0]}  "
          f"spread: {fmap.spread_db:.2f} dB")
    return 0


def _cmd_coexist(args) -> int:
    entry = rf.coexistence_lookup(args.transceiver, args.scenario, args.interference)
    rows = [
        ("transceiver", entry.transceiver, ""),
        ("scenario", entry.scenario, ""),
        ("interference", entry.interference, ""),
        ("range_low", entry.range_m[0], "m"),
        ("range_high", entry.range_m[1], "m"),
        ("throughput_loss_low", entry.throughput_loss[0], ""),
        ("throughput_loss_high", entry.throughput_loss[1], ""),
        ("interference_class", entry.interference_class, ""),
    ]
    if args.out:
        reports.write_metrics_csv(args.out, rows, timestamp=not args.no_timestamp)
    for metric, value, unit in rows:
        print(f"{metric}: {value}{' ' + unit if unit else ''}")
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "size": _cmd_size,
    "simulate": _cmd_simulate,
    "fieldmap": _cmd_fieldmap,
    "coexist": _cmd_coexist,
}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except HesskitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
