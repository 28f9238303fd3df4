"""Figure rendering for the report paths.

Each renderer writes one PNG next to the delimited output.  The Agg backend
keeps everything headless and byte-reproducible; the PNG metadata is
stripped so identical inputs give identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .hess import TRANSCEIVER_FLOOR_V
from .rf import FieldMap
from .sim import SimulationResult
from .sizing import HessDesign
from .traces import CurrentTrace

_SAVE_KW = dict(dpi=120, metadata={"Software": None})


def render_trace(trace: CurrentTrace, path: str | Path, cleaned: CurrentTrace | None = None) -> None:
    t_ms = np.arange(len(trace)) * trace.config.dt_s * 1e3
    fig, (ax_i, ax_p) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    ax_i.plot(t_ms, trace.currents_a() * 1e3, lw=0.8, label="raw")
    if cleaned is not None:
        ax_i.plot(t_ms, cleaned.currents_a() * 1e3, lw=0.8, label="cleaned")
        ax_i.legend(loc="upper right", fontsize=8)
    ax_i.set_ylabel("current [mA]")
    ax_p.plot(t_ms, trace.powers_w() * 1e3, lw=0.8, color="tab:red")
    ax_p.set_ylabel("power [mW]")
    ax_p.set_xlabel("time [ms]")
    fig.suptitle(trace.label or "sense trace")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_simulation(result: SimulationResult, path: str | Path) -> None:
    t_ms = result.t_s * 1e3
    fig, (ax_v, ax_i) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    ax_v.plot(t_ms, result.v_sc, lw=0.9, color="tab:blue")
    ax_v.axhline(TRANSCEIVER_FLOOR_V, color="tab:red", ls=":", lw=0.8)
    ax_v.set_ylabel("storage voltage [V]")
    ax_i.plot(t_ms, result.i_batt * 1e3, lw=0.8, label="battery")
    ax_i.plot(t_ms, result.i_load * 1e3, lw=0.8, label="load")
    ax_i.plot(t_ms, result.i_sc * 1e3, lw=0.8, label="capacitor")
    ax_i.set_ylabel("current [mA]")
    ax_i.set_xlabel("time [ms]")
    ax_i.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_fieldmap(fmap: FieldMap, path: str | Path) -> None:
    theta = np.unique(fmap.grid[:, 0])
    phi = np.unique(fmap.grid[:, 1])
    p = fmap.grid[:, 3].reshape(theta.size, phi.size)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(
        np.degrees(phi), np.degrees(theta), p, shading="nearest", cmap="viridis"
    )
    fig.colorbar(mesh, ax=ax, label="received power [dBm]")
    ax.set_xlabel("phi [deg]")
    ax.set_ylabel("theta [deg]")
    ax.set_title(f"{fmap.pattern.kind} pattern, spread {fmap.spread_db:.2f} dB")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_recharge(design: HessDesign, path: str | Path) -> None:
    from .hess import sc_recharge_trajectory

    window = design.feasibility.window_s
    traj = sc_recharge_trajectory(
        design.battery, design.supercap, design.switch,
        v_start=design.supercap.v_min, t_span_s=window,
    )
    t = np.linspace(0.0, window, 400)
    v = np.array([traj.voltage_at(float(x)) for x in t])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(t * 1e6, v, lw=1.2)
    ax.axhline(design.supercap.v_max, color="tab:green", ls="--", lw=0.8)
    ax.axhline(design.supercap.v_min, color="tab:orange", ls="--", lw=0.8)
    ax.set_xlabel("time into recharge window [us]")
    ax.set_ylabel("capacitor voltage [V]")
    ax.set_title(f"recharge from the working floor: {design.feasibility.verdict}")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
