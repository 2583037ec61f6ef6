import math

import numpy as np
import pytest

from beaconland.errors import DegeneratePose
from beaconland.geometry import (CameraModel, Homography, Pose3, euler_to_rotation, make_homography,
                                 mount_pose, pose_from_state, project_beacons, project_points,
                                 rot_x, rot_y, rot_z, rotation_to_euler, wrap_deg)
from beaconland.world import ImuSample, generate_beacon_map

from oracles import pinhole_project


def camera(tilt=4.0, offset=(0.0, 0.0, 0.0), **kw):
    args = dict(fx=800.0, fy=800.0, cx=320.0, cy=240.0, width=640, height=480)
    args.update(kw)
    return CameraModel(mount=mount_pose(tilt, offset), **args)


def test_elementary_rotations_follow_right_hand_rule():
    np.testing.assert_allclose(rot_z(90) @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(rot_y(90) @ [0, 0, 1], [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(rot_x(90) @ [0, 1, 0], [0, 0, 1], atol=1e-15)


def test_euler_composition_order():
    r = euler_to_rotation(30.0, 10.0, -5.0)
    np.testing.assert_allclose(r, rot_z(30) @ rot_y(10) @ rot_x(-5), atol=1e-15)


def test_positive_pitch_lowers_the_nose():
    nose = euler_to_rotation(0.0, 10.0, 0.0) @ [1.0, 0.0, 0.0]
    assert nose[2] < 0


def test_euler_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(200):
        y, p, r = rng.uniform(-179, 179), rng.uniform(-89, 89), rng.uniform(-179, 179)
        back = rotation_to_euler(euler_to_rotation(y, p, r))
        np.testing.assert_allclose(back, (y, p, r), atol=1e-9)


def test_euler_vectorized_matches_scalar():
    yaw = np.array([0.0, 45.0, -120.0])
    rs = euler_to_rotation(yaw, 3.0, 1.0)
    for i, y in enumerate(yaw):
        np.testing.assert_allclose(rs[i], euler_to_rotation(y, 3.0, 1.0))


@pytest.mark.parametrize("a, w", [(0.0, 0.0), (180.0, 180.0), (-180.0, 180.0), (190.0, -170.0),
                                  (540.0, 180.0), (-190.0, 170.0), (359.5, -0.5)])
def test_wrap_deg(a, w):
    assert wrap_deg(a) == pytest.approx(w)


def test_wrap_deg_passes_in_range_values_unchanged():
    vals = np.array([-179.999, -0.1, 0.3, 12.345678901234567, 180.0])
    assert np.array_equal(wrap_deg(vals), vals)


def test_pose_rejects_non_rotation():
    with pytest.raises(ValueError):
        Pose3(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        Pose3(np.eye(3) * 1.01)


def test_pose_inverse_and_compose():
    a = Pose3.from_euler(20, 5, -3, (1, 2, 3))
    b = Pose3.from_euler(-70, 1, 2, (-4, 0, 9))
    ident = a @ a.inverse()
    np.testing.assert_allclose(ident.matrix, np.eye(4), atol=1e-12)
    np.testing.assert_allclose((a @ b).matrix, a.matrix @ b.matrix, atol=1e-12)
    p = np.array([[1.0, -2.0, 0.5]])
    np.testing.assert_allclose((a @ b).apply(p), a.apply(b.apply(p)), atol=1e-12)


def test_mount_pose_looks_forward_and_down():
    m = mount_pose(10.0)
    axis = m.rotation @ [0.0, 0.0, 1.0]        # optical axis in the body frame
    np.testing.assert_allclose(axis, [math.cos(math.radians(10)), 0, -math.sin(math.radians(10))],
                               atol=1e-15)
    np.testing.assert_allclose(m.rotation @ [1.0, 0, 0], [0, -1, 0], atol=1e-15)  # image x = right


def test_camera_validation():
    with pytest.raises(ValueError):
        camera(fx=0.0)
    with pytest.raises(ValueError):
        camera(cx=640.0)
    with pytest.raises(ValueError):
        camera().with_gain(0.0)


def test_homography_requires_camera_above_ground():
    cam = camera()
    with pytest.raises(DegeneratePose):
        make_homography(cam, Pose3())
    with pytest.raises(DegeneratePose):
        make_homography(cam, Pose3.from_euler(0, 0, 0, (0, 0, -5)))


def test_principal_ray_hits_principal_point():
    # level camera at 10 m, ground point straight along a 45 degree tilt
    cam = camera(tilt=45.0)
    h = make_homography(cam, Pose3.from_euler(0, 0, 0, (0, 0, 10)))
    uv, vis = project_points(h, [[10.0, 0.0]], cam.width, cam.height)
    np.testing.assert_allclose(uv[0], [320.0, 240.0], atol=1e-9)
    assert vis[0]


def test_left_point_projects_left_of_center():
    cam = camera(tilt=45.0)
    h = make_homography(cam, Pose3.from_euler(0, 0, 0, (0, 0, 10)))
    uv, _ = project_points(h, [[10.0, 2.0], [10.0, -2.0]], 640, 480)
    assert uv[0, 0] < 320 < uv[1, 0]


def test_points_behind_camera_are_invisible():
    cam = camera()
    h = make_homography(cam, Pose3.from_euler(0, 0, 0, (0, 0, 10)))
    _, vis = project_points(h, [[-100.0, 0.0]], 640, 480)
    assert not vis[0]


def test_projection_is_scale_invariant_including_negative_scale():
    cam = camera()
    pose = Pose3.from_euler(3, 2, -1, (-500, 4, 30))
    h = make_homography(cam, pose)
    pts = generate_beacon_map().positions
    ref = project_beacons(h, pts, cam)
    for c in (2.5, -1.0, -1e-3, 1e6):
        got = project_beacons(h.scaled(c), pts, cam)
        assert [g.visible for g in got] == [r.visible for r in ref]
        np.testing.assert_allclose([(g.u, g.v) for g in got], [(r.u, r.v) for r in ref], rtol=1e-12)


def test_homography_matches_pinhole_oracle():
    cam = camera(tilt=6.0, offset=(1.5, 0.2, -0.3))
    pose = Pose3.from_euler(2.0, 3.0, -1.5, (-700.0, 8.0, 45.0))
    pts = generate_beacon_map().positions
    uv, _ = project_points(make_homography(cam, pose), pts, 640, 480)
    ref, depth = pinhole_project(800, 800, 320, 240, 6.0, (1.5, 0.2, -0.3), 2.0, 3.0, -1.5,
                                 (-700.0, 8.0, 45.0), np.column_stack([pts, np.zeros(len(pts))]))
    assert (depth > 0).all()
    np.testing.assert_allclose(uv, ref, atol=1e-6)


def test_pose_from_state_uses_imu_roll_and_pitch():
    class S:
        position = np.array([1.0, 2.0, 3.0])
        yaw = 12.0
    p = pose_from_state(S, ImuSample(0.0, roll=1.0, pitch=-2.0, yaw=99.0))
    np.testing.assert_allclose(p.euler(), (12.0, -2.0, 1.0), atol=1e-12)
    np.testing.assert_allclose(p.translation, [1, 2, 3])


def test_homography_value_type():
    with pytest.raises(ValueError):
        Homography(np.eye(2))
