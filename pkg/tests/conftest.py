from pathlib import Path

import pytest

from hesskit import SizingConstraints, design_hess, preset_schedule, sense_defaults
from hesskit.hess import BatterySpec, SwitchSpec

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_PATH = REPO_ROOT / "configs" / "hc05_default.conf"
TRACE_PATH = REPO_ROOT / "configs" / "jdy30_trace.csv"


@pytest.fixture(scope="session")
def hc05_design():
    return design_hess(
        preset_schedule("hc05"),
        sense_defaults("hc05"),
        BatterySpec(),
        SwitchSpec(),
        SizingConstraints(),
    )


@pytest.fixture(scope="session")
def hc05_design_literal():
    return design_hess(
        preset_schedule("hc05"),
        sense_defaults("hc05"),
        BatterySpec(),
        SwitchSpec(),
        SizingConstraints(),
        paper_literal=True,
    )
