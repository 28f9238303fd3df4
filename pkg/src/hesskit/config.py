"""Run-config parsing.

The config is a small sectioned key-value text format:

    # comment
    [schedule]
    t1_us = 950
    level1_v = 0.59

Unknown sections or keys are rejected with their file location; every key
carries its unit in the name.  Flags on the command line override config
values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DomainError
from .hess import BatterySpec, SupercapSpec, SwitchSpec
from .profiles import PhaseSchedule, Spike
from .sizing import SizingConstraints
from .traces import SenseConfig

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}

# section -> key -> python type ("float", "int", "bool", "str")
SCHEMA: dict[str, dict[str, str]] = {
    "sense": {
        "r_sense_ohm": "float",
        "v_supply_v": "float",
        "sample_rate_sps": "float",
    },
    "schedule": {
        "t1_us": "float",
        "t2_us": "float",
        "t3_us": "float",
        "t4_us": "float",
        "level1_v": "float",
        "level2_v": "float",
        "level3_v": "float",
        "level4_v": "float",
        "spike_ma": "float",
        "spike_us": "float",
        "spike_phase": "str",
    },
    "battery": {
        "v_oc": "float",
        "r_ib_ohm": "float",
        "v_soc0": "float",
        "v_soc100": "float",
    },
    "supercap": {
        "c_uf": "float",
        "esr_ohm": "float",
        "v_min": "float",
        "v_max": "float",
    },
    "switch": {
        "r_on_ohm": "float",
        "control_v_min": "float",
        "control_v_max": "float",
    },
    "sizing": {
        "delivery_fraction": "float",
        "paper_literal": "bool",
    },
    "sim": {
        "dt_us": "float",
        "cycles": "int",
        "smoothing": "bool",
        "i_batt_limit_ma": "float",
        "v_start_v": "float",
        "harvest_mw": "float",
    },
    "rf": {
        "antenna": "str",
        "peak_gain_dbi": "float",
        "shape_exponent": "float",
        "calibrate_to": "str",
        "p_tx_dbm": "float",
        "distance_m": "float",
        "freq_ghz": "float",
        "step_deg": "float",
    },
}


@dataclass
class RunConfig:
    """Parsed config document; sections hold typed values."""

    sections: dict[str, dict[str, object]] = field(default_factory=dict)
    source: str = "<config>"

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str):
        val = self.get(section, key)
        if val is None:
            raise ConfigError(f"missing required key {key!r} in [{section}]", self.source)
        return val

    def has_section(self, section: str) -> bool:
        return section in self.sections

    def _build(self, section: str, fn):
        """Turn validation failures into config errors naming the section."""
        try:
            return fn()
        except DomainError as exc:
            raise ConfigError(f"[{section}]: {exc}", self.source) from None

    # ---- domain object builders -------------------------------------

    def sense_config(self) -> SenseConfig:
        return self._build("sense", lambda: SenseConfig(
            r_sense_ohm=self.require("sense", "r_sense_ohm"),
            v_supply_v=self.require("sense", "v_supply_v"),
            sample_rate_sps=self.require("sense", "sample_rate_sps"),
        ))

    def schedule(self) -> PhaseSchedule:
        def make():
            bounds = tuple(self.require("schedule", f"t{k}_us") * 1e-6 for k in (1, 2, 3, 4))
            levels = tuple(self.require("schedule", f"level{k}_v") for k in (1, 2, 3, 4))
            spike = None
            spike_ma = self.get("schedule", "spike_ma")
            if spike_ma is not None:
                spike = Spike(
                    amplitude_a=spike_ma * 1e-3,
                    width_s=self.require("schedule", "spike_us") * 1e-6,
                    phase=self.get("schedule", "spike_phase", "T1"),
                )
            return PhaseSchedule(bounds_s=bounds, levels_v=levels, spike=spike)

        return self._build("schedule", make)

    def battery(self) -> BatterySpec:
        return self._build("battery", lambda: BatterySpec(
            v_oc=self.require("battery", "v_oc"),
            r_ib_ohm=self.require("battery", "r_ib_ohm"),
            v_soc0=self.get("battery", "v_soc0", 3.6),
            v_soc100=self.get("battery", "v_soc100", 4.2),
        ))

    def switch(self) -> SwitchSpec:
        return self._build("switch", lambda: SwitchSpec(
            r_on_ohm=self.require("switch", "r_on_ohm"),
            control_v_min=self.get("switch", "control_v_min", 1.6),
            control_v_max=self.get("switch", "control_v_max", 3.6),
        ))

    def supercap(self) -> SupercapSpec | None:
        """Explicit capacitor spec when c_uf is present; otherwise None and
        the sizing pipeline computes the capacitance."""
        c_uf = self.get("supercap", "c_uf")
        if c_uf is None:
            return None
        return self._build("supercap", lambda: SupercapSpec(
            capacitance_f=c_uf * 1e-6,
            esr_ohm=self.get("supercap", "esr_ohm", 0.05),
            v_min=self.get("supercap", "v_min", 1.8),
            v_max=self.get("supercap", "v_max", 3.6),
        ))

    def supercap_esr(self) -> float:
        return self.get("supercap", "esr_ohm", 0.05)

    def constraints(self) -> SizingConstraints:
        return self._build("supercap/sizing", lambda: SizingConstraints(
            delivery_fraction=self.get("sizing", "delivery_fraction", 0.75),
            v_min=self.get("supercap", "v_min", 1.8),
            v_max=self.get("supercap", "v_max", 3.6),
        ))


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse a config document, rejecting anything outside the schema."""
    sections: dict[str, dict[str, object]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigError(
                    f"unknown section [{name}]; known: {', '.join(sorted(SCHEMA))}", where
                )
            current = name
            sections.setdefault(name, {})
            continue
        if current is None:
            raise ConfigError(f"key outside any section: {line!r}", where)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", where)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA[current]:
            raise ConfigError(
                f"unknown key {key!r} in [{current}]; known: "
                f"{', '.join(sorted(SCHEMA[current]))}",
                where,
            )
        sections[current][key] = _coerce(value, SCHEMA[current][key], where)
    return RunConfig(sections=sections, source=source)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(p)) from None
    return parse_config_text(text, source=str(p))


def _coerce(value: str, kind: str, where: str):
    try:
        if kind == "float":
            return float(value)
        if kind == "int":
            return int(value)
        if kind == "bool":
            try:
                return _BOOL[value.lower()]
            except KeyError:
                raise ValueError(value)
        return value
    except ValueError:
        raise ConfigError(f"cannot parse {value!r} as {kind}", where) from None
