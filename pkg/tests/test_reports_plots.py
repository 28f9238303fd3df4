import numpy as np
import pytest

from hesskit import run_cycle, sense_defaults, synthesize_trace, preset_schedule
from hesskit.errors import TraceFormatError
from hesskit.plots import render_fieldmap, render_recharge, render_simulation, render_trace
from hesskit.reports import (
    read_trace_csv,
    write_metrics_csv,
    write_trace_csv,
    write_waveform_csv,
)
from hesskit.rf import AntennaPattern, field_map
import math


@pytest.fixture(scope="module")
def jdy30_trace():
    return synthesize_trace(preset_schedule("jdy30"), sense_defaults("jdy30"))


class TestTraceIO:
    def test_roundtrip(self, tmp_path, jdy30_trace):
        p = tmp_path / "t.csv"
        write_trace_csv(p, jdy30_trace)
        back = read_trace_csv(p, jdy30_trace.config)
        assert np.allclose(back.samples, jdy30_trace.samples, rtol=0, atol=1e-12)

    def test_missing_header(self, tmp_path, jdy30_trace):
        p = tmp_path / "t.csv"
        p.write_text("0,0.1\n1,0.2\n")
        with pytest.raises(TraceFormatError, match="header"):
            read_trace_csv(p, jdy30_trace.config)

    def test_bad_row_carries_line_number(self, tmp_path, jdy30_trace):
        p = tmp_path / "t.csv"
        p.write_text("index,voltage_v\n0,0.1\nbroken\n")
        with pytest.raises(TraceFormatError, match="line 3"):
            read_trace_csv(p, jdy30_trace.config)


class TestWriters:
    def test_metrics_header_and_timestamp_toggle(self, tmp_path):
        p = tmp_path / "m.csv"
        write_metrics_csv(p, [("x", 1.5, "J")], timestamp=False)
        assert p.read_text() == "metric,value,unit\nx,1.5,J\n"
        write_metrics_csv(p, [("x", 1.5, "J")], timestamp=True)
        assert p.read_text().startswith("# generated ")

    def test_waveform_comment_ledger(self, tmp_path, hc05_design):
        res = run_cycle(hc05_design, dt=1e-6, cycles=1)
        p = tmp_path / "w.csv"
        write_waveform_csv(p, res, timestamp=False)
        text = p.read_text().splitlines()
        assert text[0] == "t_s,v_sc_v,i_batt_a,i_sc_a,i_load_a,p_load_w"
        assert any(l.startswith("# source_energy_j=") for l in text)


class TestPlots:
    def test_renderers_produce_files(self, tmp_path, hc05_design, jdy30_trace):
        res = run_cycle(hc05_design, dt=1e-6, cycles=2)
        fmap = field_map(AntennaPattern(kind="monopole_omni"), 0.0, 5.0, math.radians(10))
        for name, call in (
            ("trace.png", lambda p: render_trace(jdy30_trace, p)),
            ("sim.png", lambda p: render_simulation(res, p)),
            ("fmap.png", lambda p: render_fieldmap(fmap, p)),
            ("recharge.png", lambda p: render_recharge(hc05_design, p)),
        ):
            target = tmp_path / name
            call(target)
            assert target.stat().st_size > 1000

    def test_render_is_deterministic(self, tmp_path, jdy30_trace):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render_trace(jdy30_trace, a)
        render_trace(jdy30_trace, b)
        assert a.read_bytes() == b.read_bytes()
