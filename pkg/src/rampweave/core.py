"""Physical constants, unit helpers, vehicles and corridor geometry.

Everything inside the package runs in SI units (m, s, m/s). km/h shows up
only at the edge of the formulas that are stated in km/h; those call sites
convert explicitly with :func:`kmh_to_ms` / :func:`ms_to_kmh`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

KMH_PER_MS = 3.6


@dataclass(frozen=True)
class Constants:
    L1: float = 0.02  # GPS positioning error, m
    tau_clk: float = 3e-9  # clock sync error, s
    phi: float = 0.4  # tyre/road adhesion
    varphi: float = 0.11  # road resistance
    L_v: float = 5.0  # vehicle length, m
    S_a: float = 200.0  # acceleration lane length, m
    t_col: float = 0.2  # collision duration, s
    a_max: float = 6.0  # comfort bound on ramp acceleration, m/s^2
    g: float = 9.8
    theta_merge: float = 30.0  # merge angle, degrees

    @property
    def J_crit(self) -> float:
        # (0.3 g)^2, i.e. 0.09 g^2; the squared form rounds to exactly 8.6436
        return (0.3 * self.g) ** 2

    @property
    def L_mm(self) -> float:
        """Equal-speed spacing between two mainline vehicles."""
        return 2 * self.L1

    @property
    def braking_denominator(self) -> float:
        # the 254*(phi+varphi) term shared by every km/h braking-distance formula
        return 254.0 * (self.phi + self.varphi)


CONSTANTS = Constants()


class VehicleClass(str, enum.Enum):
    MAINLINE = "mainline"
    RAMP = "ramp"


class Lane(str, enum.Enum):
    MAIN = "main"
    RAMP = "ramp"  # ramp plus acceleration lane, a single queue


@dataclass(frozen=True)
class VehicleState:
    """Snapshot of one vehicle. ``station`` is the front-bumper milepost."""

    id: int
    cls: VehicleClass
    station: float
    speed: float
    accel: float = 0.0
    length: float = CONSTANTS.L_v
    lane: Lane | None = None

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"vehicle {self.id}: negative speed {self.speed}")
        if self.lane is None:
            lane = Lane.MAIN if self.cls == VehicleClass.MAINLINE else Lane.RAMP
            object.__setattr__(self, "lane", lane)

    @property
    def rear(self) -> float:
        return self.station - self.length


@dataclass(frozen=True)
class Geometry:
    ramp_start: float = -400.0
    ramp_end: float = 0.0
    accel_lane: tuple[float, float] = (0.0, 200.0)
    mainline_span: tuple[float, float] = (-600.0, 200.0)

    @property
    def ramp_length(self) -> float:
        return self.ramp_end - self.ramp_start

    @property
    def accel_lane_length(self) -> float:
        return self.accel_lane[1] - self.accel_lane[0]

    @property
    def mainline_length(self) -> float:
        return self.mainline_span[1] - self.mainline_span[0]

    @property
    def exit_station(self) -> float:
        return self.mainline_span[1]


GEOMETRY = Geometry()


@dataclass(frozen=True)
class Speed:
    """Speed stored in m/s with explicit km/h views."""

    ms: float = field(default=0.0)

    def __post_init__(self):
        if not math.isfinite(self.ms):
            raise ValueError("speed must be finite")

    @classmethod
    def from_kmh(cls, kmh: float) -> "Speed":
        return cls(kmh / KMH_PER_MS)

    @property
    def kmh(self) -> float:
        return self.ms * KMH_PER_MS


def kmh_to_ms(v: float) -> float:
    if v < 0:
        raise ValueError(f"speed must be non-negative, got {v} km/h")
    return v / KMH_PER_MS


def ms_to_kmh(v: float) -> float:
    if v < 0:
        raise ValueError(f"speed must be non-negative, got {v} m/s")
    return v * KMH_PER_MS


def merge_lateral_speed(v0: float, constants: Constants = CONSTANTS) -> float:
    """Speed component (km/h) of a merging vehicle travelling at ``v0`` km/h
    along the 30 degree merge path. Used as the merging vehicle's speed in
    the merge clearance formulas."""
    if v0 < 0:
        raise ValueError(f"speed must be non-negative, got {v0} km/h")
    return v0 * math.cos(math.radians(constants.theta_merge))
