"""Intersection geometry: radar pose, lane layout and kinematic targets.

Coordinate frame (right-handed): origin is the ground projection of the
radar, X runs across the lanes, Y along the monitored road, Z up.  All
queries are pure functions of immutable scene data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class LaneLayout:
    """Lane geometry across the X axis."""

    intersection_width: float = 22.5
    lane_width: float = 3.75
    lane_center_x: tuple[float, ...] = (2.0, 5.75, 9.5)

    def __post_init__(self):
        if self.lane_width <= 0:
            raise SceneError("lane_width must be positive")
        centers = tuple(float(x) for x in self.lane_center_x)
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise SceneError("lane_center_x must be strictly increasing")
        object.__setattr__(self, "lane_center_x", centers)

    @property
    def num_lanes(self) -> int:
        return len(self.lane_center_x)

    def lane_span(self, lane_index: int) -> tuple[float, float]:
        cx = self.lane_center_x[lane_index]
        return cx - self.lane_width / 2, cx + self.lane_width / 2

    def nearest_lane(self, x: float) -> int:
        return int(np.argmin([abs(x - c) for c in self.lane_center_x]))


def default_intersection() -> LaneLayout:
    """Three-lane layout of the simulated intersection: 22.5 m wide,
    3.75 m lanes centered at x = 2 / 5.75 / 9.5 m."""
    return LaneLayout()


@dataclass(frozen=True)
class RadarPose:
    """Radar mounted on the traffic-light pole, 6 m above the origin,
    boresight along +Y with a configurable downtilt."""

    position: tuple[float, float, float] = (0.0, 0.0, 6.0)
    downtilt_deg: float = 5.0

    def __post_init__(self):
        if self.position[2] <= 0:
            raise SceneError("radar height must be positive")

    @property
    def height(self) -> float:
        return self.position[2]

    @property
    def boresight(self) -> np.ndarray:
        """Unit boresight vector: +Y tilted down by downtilt_deg."""
        t = math.radians(self.downtilt_deg)
        b = np.array([0.0, math.cos(t), -math.sin(t)])
        return b / np.linalg.norm(b)


@dataclass(frozen=True)
class TargetTrack:
    """Constant-velocity target in a lane, driving toward the radar."""

    target_id: str
    mesh_ref: str
    lane_index: int
    initial_range_y: float
    speed: float
    heading: tuple[float, float] = (0.0, -1.0)
    lane_offset_x: float = 0.0
    height: float = 1.8

    def __post_init__(self):
        if self.speed < 0:
            raise SceneError(f"target {self.target_id}: speed must be >= 0")
        h = np.array(self.heading, dtype=float)
        n = np.linalg.norm(h)
        if n == 0:
            raise SceneError(f"target {self.target_id}: zero heading")
        object.__setattr__(self, "heading", tuple(h / n))


@dataclass(frozen=True)
class LookGeometry:
    """Radar's view of one target at one instant."""

    range: float
    azimuth: float
    elevation: float
    radial_velocity: float  # positive = approaching

    def __post_init__(self):
        if self.range <= 0:
            raise SceneError("look range must be positive")


@dataclass(frozen=True)
class Scene:
    lanes: LaneLayout = field(default_factory=default_intersection)
    radar: RadarPose = field(default_factory=RadarPose)
    targets: tuple[TargetTrack, ...] = ()

    def __post_init__(self):
        for t in self.targets:
            if not 0 <= t.lane_index < self.lanes.num_lanes:
                raise SceneError(f"target {t.target_id}: lane_index {t.lane_index} out of range")
        object.__setattr__(self, "targets", tuple(self.targets))

    def track(self, target_id: str) -> TargetTrack:
        for t in self.targets:
            if t.target_id == target_id:
                return t
        raise SceneError(f"unknown target_id {target_id!r}")

    def initial_position(self, track: TargetTrack) -> np.ndarray:
        x = self.lanes.lane_center_x[track.lane_index] + track.lane_offset_x
        # mesh rests on the ground, anchor at half its height
        return np.array([x, track.initial_range_y, track.height / 2])

    def target_pose_at(self, track: TargetTrack, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and velocity of a track at time t (constant velocity)."""
        if t < 0:
            raise SceneError("t must be >= 0")
        vel = np.array([track.heading[0], track.heading[1], 0.0]) * track.speed
        pos = self.initial_position(track) + vel * t
        return pos, vel


def look_geometry(radar: RadarPose, position, velocity) -> LookGeometry:
    """Range, azimuth (in the array plane from boresight), elevation and
    radial velocity of a point target seen from the radar."""
    p = np.asarray(position, dtype=float) - np.asarray(radar.position, dtype=float)
    r = float(np.linalg.norm(p))
    if r == 0:
        raise SceneError("degenerate geometry: target at radar position")
    azimuth = math.atan2(p[0], p[1])
    ground = math.hypot(p[0], p[1])
    elevation = math.atan2(p[2], ground)
    los = p / r
    radial_velocity = -float(np.dot(np.asarray(velocity, dtype=float), los))
    return LookGeometry(range=r, azimuth=azimuth, elevation=elevation,
                        radial_velocity=radial_velocity)
