"""Beacon layout, synthetic glide trajectory and IMU streams."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import BadLayout
from .geometry import Pose3, wrap_deg

TERMINAL_ALTITUDE_M = 0.5


def rng_for(seed, *labels):
    """Independent generator for one consumer of a run's master seed.

    Labels are hashed with CRC32 so the stream depends only on
    ``(seed, labels)`` and not on the order in which consumers are created.
    """
    key = tuple(zlib.crc32(str(lab).encode()) for lab in labels)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


@dataclass(frozen=True)
class BeaconMap:
    positions: np.ndarray

    def __post_init__(self):
        p = np.array(self.positions, dtype=float).reshape(-1, 2)
        if len(p) < 4:
            raise BadLayout("a beacon map needs at least 4 beacons")
        if len(np.unique(p, axis=0)) != len(p):
            raise BadLayout("beacon positions must be pairwise distinct")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    def __len__(self):
        return len(self.positions)

    @property
    def homogeneous(self):
        return np.column_stack([self.positions, np.ones(len(self.positions))])

    @property
    def points3d(self):
        return np.column_stack([self.positions, np.zeros(len(self.positions))])


def generate_beacon_map(count=16, spacing=50.0, runway_width=40.0):
    """Two parallel lines of beacons along the runway edges.

    Beacons come in left/right pairs at x = 0, spacing, 2*spacing, ...;
    the left line sits at y = +runway_width/2.
    """
    if count < 4 or count % 2:
        raise BadLayout(f"count must be even and >= 4, got {count}")
    if not spacing > 0 or not runway_width > 0:
        raise BadLayout("spacing and runway_width must be positive")
    half = runway_width / 2.0
    pts = []
    for i in range(count // 2):
        x = i * spacing
        pts.append((x, half))
        pts.append((x, -half))
    return BeaconMap(np.array(pts))


@dataclass(frozen=True)
class GlideConfig:
    start_distance: float = 1000.0
    start_altitude: float = 60.0
    glide_angle: float = math.degrees(math.atan2(60.0, 1000.0))
    speed: float = 30.0
    frame_rate: float = 10.0
    lateral_offset: float = 0.0
    heading_offset: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.glide_angle < 15.0:
            raise ValueError("glide_angle must lie in (0, 15) degrees")
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        if not self.frame_rate > 0:
            raise ValueError("frame_rate must be positive")
        if not self.start_distance > 0 or not self.start_altitude > TERMINAL_ALTITUDE_M:
            raise ValueError("start point must be before the threshold and above ground")

    @property
    def touchdown(self):
        """Ground point where the glide line meets Z = 0."""
        run = self.start_altitude / math.tan(math.radians(self.glide_angle))
        return np.array([-self.start_distance + run, 0.0, 0.0])


@dataclass(frozen=True)
class ImuSample:
    t: float
    roll: float
    pitch: float
    yaw: float


@dataclass(frozen=True)
class TruthRecord:
    t: float
    pose: Pose3
    speed: float

    @property
    def position(self):
        return self.pose.translation


def generate_glide_trajectory(cfg: GlideConfig) -> list[TruthRecord]:
    """Straight constant-speed descent toward the touchdown point.

    Arc length along the descent line advances by ``speed / frame_rate`` per
    frame. Lateral and heading offsets shrink linearly to zero at touchdown.
    The record that first reaches ``altitude <= 0.5 m`` is the last one.
    """
    g = math.radians(cfg.glide_angle)
    cg, sg = math.cos(g), math.sin(g)
    run = cfg.start_altitude / math.tan(g)
    dt = 1.0 / cfg.frame_rate
    step = cfg.speed * dt
    out = []
    k = 0
    while True:
        s = k * step
        along = s * cg
        left = max(0.0, 1.0 - along / run)
        pos = (-cfg.start_distance + along,
               cfg.lateral_offset * left,
               cfg.start_altitude - s * sg)
        yaw = cfg.heading_offset * left
        out.append(TruthRecord(k * dt, Pose3.from_euler(yaw, 0.0, 0.0, pos), cfg.speed))
        if pos[2] <= TERMINAL_ALTITUDE_M:
            break
        k += 1
    return out


def synthesize_imu(truth, yaw_sigma=0.05, yaw_bias=2.0, attitude_sigma=0.05, seed=0):
    """IMU attitude stream for a truth trajectory.

    Yaw carries a constant bias plus a Gaussian random walk (zero at the first
    sample); roll and pitch get independent white noise.
    """
    if yaw_sigma < 0 or attitude_sigma < 0:
        raise ValueError("noise sigmas must be non-negative")
    rng = np.random.default_rng(seed)
    n = len(truth)
    steps = rng.normal(0.0, 1.0, n) * yaw_sigma
    steps[0] = 0.0
    walk = np.cumsum(steps)
    roll_n = rng.normal(0.0, 1.0, n) * attitude_sigma
    pitch_n = rng.normal(0.0, 1.0, n) * attitude_sigma
    out = []
    for i, rec in enumerate(truth):
        yaw, pitch, roll = rec.pose.euler()
        out.append(ImuSample(
            t=rec.t,
            roll=roll + roll_n[i],
            pitch=pitch + pitch_n[i],
            yaw=wrap_deg(yaw + yaw_bias + walk[i]),
        ))
    return out
