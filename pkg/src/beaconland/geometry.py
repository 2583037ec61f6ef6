"""Frames, camera model and the ground-plane homography.

Conventions (fixed for the whole package):

* World frame: origin at the runway threshold midway between the beacon
  lines, X along the runway centerline in the direction of flight on
  approach, Y to the left, Z up. The ground is the plane Z = 0.
* UAV body frame: X forward, Y left, Z up.
* Euler angles are intrinsic yaw (Z), then pitch (Y), then roll (X), so
  ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``. All rotations follow the right-hand
  rule; with Y pointing left a positive pitch therefore lowers the nose.
* Camera frame: the usual computer-vision one, x right, y down, z along the
  optical axis. ``CameraModel.mount`` maps camera coordinates into the body
  frame.

Angles in the public API are degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePose

# 3x4 row selector: keeps camera-frame (x, y, z) and drops the homogeneous 1.
SELECT = np.array(
    [[1.0, 0.0, 0.0, 0.0],
     [0.0, 1.0, 0.0, 0.0],
     [0.0, 0.0, 1.0, 0.0]]
)
# 4x3 lifter: ground-plane (x, y, 1) -> homogeneous (x, y, 0, 1).
LIFT = np.array(
    [[1.0, 0.0, 0.0],
     [0.0, 1.0, 0.0],
     [0.0, 0.0, 0.0],
     [0.0, 0.0, 1.0]]
)

# Body (X fwd, Y left, Z up) <- camera (x right, y down, z fwd), zero tilt.
_CAM_TO_BODY = np.array(
    [[0.0, 0.0, 1.0],
     [-1.0, 0.0, 0.0],
     [0.0, -1.0, 0.0]]
)

_ORTHO_TOL = 1e-9


def rot_x(deg):
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg):
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg):
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_rotation(yaw, pitch, roll):
    """Vectorized ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``; angles in degrees.

    Any argument may be an array; the result has shape ``broadcast + (3, 3)``.
    """
    y, p, r = np.broadcast_arrays(*(np.radians(np.asarray(a, dtype=float))
                                    for a in (yaw, pitch, roll)))
    cy, sy = np.cos(y), np.sin(y)
    cp, sp = np.cos(p), np.sin(p)
    cr, sr = np.cos(r), np.sin(r)
    out = np.empty(y.shape + (3, 3))
    out[..., 0, 0] = cy * cp
    out[..., 0, 1] = cy * sp * sr - sy * cr
    out[..., 0, 2] = cy * sp * cr + sy * sr
    out[..., 1, 0] = sy * cp
    out[..., 1, 1] = sy * sp * sr + cy * cr
    out[..., 1, 2] = sy * sp * cr - cy * sr
    out[..., 2, 0] = -sp
    out[..., 2, 1] = cp * sr
    out[..., 2, 2] = cp * cr
    return out


def rotation_to_euler(r):
    """Inverse of :func:`euler_to_rotation` -> (yaw, pitch, roll) degrees."""
    r = np.asarray(r, dtype=float)
    pitch = np.degrees(np.arcsin(np.clip(-r[2, 0], -1.0, 1.0)))
    yaw = np.degrees(np.arctan2(r[1, 0], r[0, 0]))
    roll = np.degrees(np.arctan2(r[2, 1], r[2, 2]))
    return float(yaw), float(pitch), float(roll)


def wrap_deg(a):
    """Wrap angles to (-180, 180]."""
    a = np.asarray(a, dtype=float)
    # values already in range pass through bit-exact
    w = np.mod(a + 180.0, 360.0) - 180.0
    w = np.where(w == -180.0, 180.0, w)
    w = np.where((a > -180.0) & (a <= 180.0), a, w)
    if np.ndim(w) == 0:
        return float(w)
    return w


@dataclass(frozen=True)
class Pose3:
    """Rigid transform mapping child-frame coordinates into the parent frame."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(3)
        if r.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if (np.abs(r.T @ r - np.eye(3)).max() > _ORTHO_TOL
                or abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL):
            raise ValueError("rotation is not a proper orthonormal matrix")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_euler(cls, yaw=0.0, pitch=0.0, roll=0.0, translation=(0, 0, 0)):
        return cls(euler_to_rotation(yaw, pitch, roll), translation)

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self):
        rt = self.rotation.T
        return Pose3(rt, -rt @ self.translation)

    def compose(self, other):
        """``self ∘ other``: apply ``other`` first, then ``self``."""
        return Pose3(self.rotation @ other.rotation,
                     self.rotation @ other.translation + self.translation)

    __matmul__ = compose

    def apply(self, points):
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def euler(self):
        return rotation_to_euler(self.rotation)


def mount_pose(tilt_down=0.0, offset=(0.0, 0.0, 0.0)):
    """Forward-looking camera mount, optical axis tilted ``tilt_down`` degrees
    below the body X axis."""
    return Pose3(rot_y(tilt_down) @ _CAM_TO_BODY, offset)


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    mount: Pose3 = field(default_factory=mount_pose)
    exposure_gain: float = 1.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if not self.exposure_gain > 0:
            raise ValueError("exposure_gain must be positive")

    @property
    def K(self):
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def diagonal(self):
        return float(np.hypot(self.width, self.height))

    def with_gain(self, gain):
        return CameraModel(self.fx, self.fy, self.cx, self.cy, self.width,
                           self.height, self.mount, float(gain))

    def world_pose(self, uav_pose):
        """Camera pose in the world frame."""
        return uav_pose @ self.mount


@dataclass(frozen=True)
class Homography:
    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    def scaled(self, c):
        return Homography(self.h * c)


@dataclass(frozen=True)
class ImagePoint:
    u: float
    v: float
    visible: bool


def projection_prefix(camera):
    """Constant 3x4 factor ``K @ SELECT @ mount^-1`` shared by every particle."""
    return camera.K @ SELECT @ camera.mount.inverse().matrix


def make_homography(camera, uav_pose):
    """Ground-plane homography ``K · SELECT · RT_cam⁻¹ · RT_uav⁻¹ · LIFT``.

    Returned unnormalized. Raises :class:`DegeneratePose` when the camera
    center is not strictly above the ground.
    """
    center = camera.world_pose(uav_pose).translation
    if not center[2] > 0.0:
        raise DegeneratePose(f"camera center z={center[2]:.6g} m is not above the ground")
    h = projection_prefix(camera) @ uav_pose.inverse().matrix @ LIFT
    return Homography(h)


def project_points(h, xy, width, height):
    """Vectorized projection of ground points.

    Returns ``(uv, visible)``. The sign of ``det(h)`` fixes which side of the
    camera counts as "in front", so ``h`` and ``c*h`` give identical results
    for any ``c != 0`` (a physical homography of a camera above the ground
    has ``det < 0``).
    """
    hm = np.asarray(h.h if isinstance(h, Homography) else h, dtype=float)
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    ph = xy @ hm[:, :2].T + hm[:, 2]
    sign = -1.0 if np.linalg.det(hm) > 0 else 1.0
    w = ph[:, 2] * sign
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = ph[:, :2] / ph[:, 2:3]
    visible = ((w > 0) & (uv[:, 0] >= 0) & (uv[:, 0] < width)
               & (uv[:, 1] >= 0) & (uv[:, 1] < height))
    return uv, visible


def project_beacons(h, beacons, camera) -> list[ImagePoint]:
    positions = getattr(beacons, "positions", beacons)
    uv, vis = project_points(h, positions, camera.width, camera.height)
    return [ImagePoint(float(u), float(v), bool(ok))
            for (u, v), ok in zip(uv, vis)]


def pose_from_state(state, imu):
    """UAV pose from a filter state (translation, yaw) and IMU roll/pitch."""
    return Pose3.from_euler(state.yaw, imu.pitch, imu.roll, state.position)
