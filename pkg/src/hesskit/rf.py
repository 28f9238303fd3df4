"""Parametric RF side-models.

Antenna patterns at the parametric level (no geometry, no EM solving), the
free-space link budget, full-sphere received-power maps, the band
coexistence lookup table, and a calibrated power-vs-distance interpolator.

Patterns are shapes, not absolute gains: reproducing a measured map needs
one scalar calibration offset per setup, fitted so the map extremes match
the measured range.  A relative floor caps the pattern nulls so exported
maps hold finite values only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT_M_S = 299_792_458.0
DEFAULT_FREQ_HZ = 2.44e9

# Hard floor for pattern nulls, keeping exports finite.
PATTERN_FLOOR_DBI = -60.0

ISOTROPIC = "isotropic"
MONOPOLE = "monopole_omni"
PATCH = "patch_directional"
_KINDS = (ISOTROPIC, MONOPOLE, PATCH)


@dataclass(frozen=True)
class AntennaPattern:
    """Parametric gain shape.

    monopole_omni: azimuth-independent, peak in the equatorial plane and a
    null along the axis (sin^2 power law).  patch_directional: peak
    broadside (theta=0) with a cosine-power falloff set by shape_exponent,
    floored behind the element.  rel_floor_db, when set, caps the pattern
    at peak minus that depth; calibrated patterns use it to pin the
    max-min spread of a map.
    """

    kind: str
    peak_gain_dbi: float = 0.0
    shape_exponent: float = 1.0
    rel_floor_db: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown antenna kind {self.kind!r}; known: {_KINDS}")
        if self.shape_exponent <= 0:
            raise DomainError("shape exponent must be positive")
        if self.rel_floor_db is not None and self.rel_floor_db <= 0:
            raise DomainError("relative floor depth must be positive")

    @property
    def floor_dbi(self) -> float:
        if self.rel_floor_db is not None:
            return self.peak_gain_dbi - self.rel_floor_db
        return PATTERN_FLOOR_DBI


def pattern_gain(pattern: AntennaPattern, theta: float, phi: float) -> float:
    """Gain in dBi at spherical direction (theta from +z, phi azimuth)."""
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"theta {theta} outside [0, pi]")
    if not 0.0 <= phi < 2.0 * math.pi + 1e-12:
        raise DomainError(f"phi {phi} outside [0, 2*pi)")
    if pattern.kind == ISOTROPIC:
        return 0.0
    if pattern.kind == MONOPOLE:
        s = math.sin(theta)
        if s <= 0.0:
            return pattern.floor_dbi
        g = pattern.peak_gain_dbi + 20.0 * math.log10(s)
    else:  # patch
        c = math.cos(theta)
        if c <= 0.0:
            return pattern.floor_dbi
        g = pattern.peak_gain_dbi + 10.0 * pattern.shape_exponent * math.log10(c)
    return max(g, pattern.floor_dbi)


def free_space_path_loss_db(d_m: float, f_hz: float) -> float:
    """FSPL = 20 log10(4 pi d f / c)."""
    if d_m <= 0 or f_hz <= 0:
        raise DomainError("distance and frequency must be positive")
    return 20.0 * math.log10(4.0 * math.pi * d_m * f_hz / SPEED_OF_LIGHT_M_S)


def received_power_dbm(
    p_tx_dbm: float, g_tx_dbi: float, g_rx_dbi: float, d_m: float, f_hz: float
) -> float:
    """Free-space link budget: p_tx + gains - path loss."""
    return p_tx_dbm + g_tx_dbi + g_rx_dbi - free_space_path_loss_db(d_m, f_hz)


@dataclass(frozen=True)
class FieldMap:
    """Full-sphere received-power samples at a fixed radius.

    grid rows are (theta_rad, phi_rad, r_m, p_dbm), row-major in
    (theta, phi).
    """

    grid: np.ndarray
    pattern: AntennaPattern
    p_tx_dbm: float
    f_hz: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.grid)):
            raise DomainError("field map must contain finite values only")
        g = np.asarray(self.grid, dtype=float)
        g.flags.writeable = False
        object.__setattr__(self, "grid", g)

    @property
    def p_dbm(self) -> np.ndarray:
        return self.grid[:, 3]

    @property
    def spread_db(self) -> float:
        return float(self.p_dbm.max() - self.p_dbm.min())


def field_map(
    pattern: AntennaPattern,
    p_tx_dbm: float,
    d_m: float,
    angular_step_rad: float,
    f_hz: float = DEFAULT_FREQ_HZ,
    g_rx_dbi: float = 0.0,
) -> FieldMap:
    """Sample the received power over the sphere at radius d_m."""
    if angular_step_rad <= 0:
        raise DomainError("angular step must be positive")
    n_theta = round(math.pi / angular_step_rad)
    if n_theta < 1 or abs(n_theta * angular_step_rad - math.pi) > 1e-9:
        raise DomainError(
            f"angular step {angular_step_rad} rad must divide pi evenly"
        )
    thetas = np.linspace(0.0, math.pi, n_theta + 1)
    n_phi = 2 * n_theta
    phis = np.arange(n_phi) * (2.0 * math.pi / n_phi)
    base = received_power_dbm(p_tx_dbm, 0.0, g_rx_dbi, d_m, f_hz)
    rows = np.empty((thetas.size * phis.size, 4))
    k = 0
    for th in thetas:
        # all shipped patterns are azimuth-independent, so one gain per ring
        p = base + pattern_gain(pattern, float(th), 0.0)
        for ph in phis:
            rows[k] = (th, ph, d_m, p)
            k += 1
    return FieldMap(grid=rows, pattern=pattern, p_tx_dbm=p_tx_dbm, f_hz=f_hz)


# Measured received-power extremes at 5 m, used as calibration targets:
# pattern kind, (max_dbm, min_dbm).
MEASURED_MAP_TARGETS = {
    "micaz": (MONOPOLE, (-65.71, -77.70)),
    "hc05": (PATCH, (-63.1, -67.38)),
}


def calibrate_pattern(
    target: str,
    p_tx_dbm: float = 0.0,
    d_m: float = 5.0,
    f_hz: float = DEFAULT_FREQ_HZ,
    g_rx_dbi: float = 0.0,
) -> AntennaPattern:
    """Pattern whose map at (p_tx, d, f) spans a measured dBm range.

    One scalar offset pins the map maximum to the measured maximum; the
    relative floor pins the spread.  The shape stays the parametric
    monopole/patch law.
    """
    try:
        kind, (top, bottom) = MEASURED_MAP_TARGETS[target]
    except KeyError:
        raise DomainError(
            f"unknown calibration target {target!r}; known: "
            f"{', '.join(sorted(MEASURED_MAP_TARGETS))}"
        ) from None
    base = received_power_dbm(p_tx_dbm, 0.0, g_rx_dbi, d_m, f_hz)
    return AntennaPattern(
        kind=kind, peak_gain_dbi=top - base, rel_floor_db=top - bottom
    )


@dataclass(frozen=True)
class CoexistenceEntry:
    """One transceiver's range/throughput/interference characteristics.

    Ranges are (low, high) metre intervals; losses are (low, high)
    fractions.  Antenna variants hold the long-range-antenna figures where
    published.
    """

    transceiver: str
    indoor_same_floor_m: tuple[float, float]
    indoor_between_floors_m: tuple[float, float]
    outdoor_m: tuple[float, float]
    loss_severe: tuple[float, float]
    loss_average: tuple[float, float]
    interference_class: str
    indoor_with_antenna_m: tuple[float, float] | None = None
    outdoor_with_antenna_m: tuple[float, float] | None = None


COEXISTENCE_TABLE = {
    "hc05": CoexistenceEntry(
        transceiver="hc05",
        indoor_same_floor_m=(10.0, 15.0),
        indoor_between_floors_m=(6.0, 10.0),
        outdoor_m=(30.0, 40.0),
        loss_severe=(0.30, 0.50),
        loss_average=(0.15, 0.20),
        interference_class="considerable",
    ),
    "jdy30": CoexistenceEntry(
        transceiver="jdy30",
        indoor_same_floor_m=(10.0, 10.0),
        indoor_between_floors_m=(5.0, 5.0),
        outdoor_m=(30.0, 30.0),
        loss_severe=(0.45, 0.60),
        loss_average=(0.20, 0.20),
        interference_class="considerable",
    ),
    "hm10": CoexistenceEntry(
        transceiver="hm10",
        indoor_same_floor_m=(5.0, 5.0),
        indoor_between_floors_m=(2.0, 3.0),
        outdoor_m=(20.0, 30.0),
        loss_severe=(0.70, 0.80),
        loss_average=(0.25, 0.25),
        interference_class="worst",
    ),
    "nrf24": CoexistenceEntry(
        transceiver="nrf24",
        indoor_same_floor_m=(15.0, 25.0),
        indoor_between_floors_m=(15.0, 15.0),
        outdoor_m=(100.0, 100.0),
        loss_severe=(0.0, 0.20),
        loss_average=(0.0, 0.20),
        interference_class="negligible",
        indoor_with_antenna_m=(100.0, 200.0),
        outdoor_with_antenna_m=(1000.0, 1000.0),
    ),
}

# Outdoor interference is negligible for most setups: loss stays under 20%.
OUTDOOR_NO_INTERFERENCE_LOSS = (0.0, 0.20)


@dataclass(frozen=True)
class CoexistenceSlice:
    transceiver: str
    scenario: str
    interference: str
    range_m: tuple[float, float]
    throughput_loss: tuple[float, float]
    interference_class: str


def coexistence_lookup(
    transceiver: str, scenario: str = "indoor", interference: str = "severe"
) -> CoexistenceSlice:
    """Range and throughput-loss intervals for one operating scenario."""
    try:
        entry = COEXISTENCE_TABLE[transceiver]
    except KeyError:
        raise DomainError(
            f"unknown transceiver {transceiver!r}; known: "
            f"{', '.join(sorted(COEXISTENCE_TABLE))}"
        ) from None
    if scenario not in ("indoor", "outdoor"):
        raise DomainError(f"scenario must be indoor or outdoor, got {scenario!r}")
    if interference not in ("severe", "average", "none"):
        raise DomainError(
            f"interference must be severe, average or none, got {interference!r}"
        )
    range_m = entry.indoor_same_floor_m if scenario == "indoor" else entry.outdoor_m
    if interference == "severe":
        loss = entry.loss_severe
    elif interference == "average":
        loss = entry.loss_average
    else:
        loss = OUTDOOR_NO_INTERFERENCE_LOSS
    return CoexistenceSlice(
        transceiver=transceiver,
        scenario=scenario,
        interference=interference,
        range_m=range_m,
        throughput_loss=loss,
        interference_class=entry.interference_class,
    )


def power_vs_distance(
    calibration_points: list[tuple[float, float]], d_m: float
) -> float:
    """Monotone piecewise-linear draw-vs-distance model.

    Calibration points are (distance_m, power_w) with strictly increasing
    distances and non-decreasing powers; queries beyond the calibrated span
    extrapolate with the end slopes, floored at zero.
    """
    if len(calibration_points) < 2:
        raise DomainError("need at least two calibration points")
    ds = [d for d, _ in calibration_points]
    ps = [p for _, p in calibration_points]
    for a, b in zip(ds, ds[1:]):
        if b <= a:
            raise DomainError(f"distances must be strictly increasing: {a} then {b}")
    for a, b in zip(ps, ps[1:]):
        if b < a:
            raise DomainError(f"powers must be non-decreasing: {a} then {b}")
    if d_m <= 0:
        raise DomainError(f"query distance must be positive, got {d_m}")
    if d_m <= ds[0]:
        slope = (ps[1] - ps[0]) / (ds[1] - ds[0])
        return max(0.0, ps[0] + slope * (d_m - ds[0]))
    if d_m >= ds[-1]:
        slope = (ps[-1] - ps[-2]) / (ds[-1] - ds[-2])
        return max(0.0, ps[-1] + slope * (d_m - ds[-1]))
    return float(np.interp(d_m, ds, ps))
