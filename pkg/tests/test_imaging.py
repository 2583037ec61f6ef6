import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from beaconland.errors import NoFeasibleGain
from beaconland.geometry import CameraModel, Pose3, mount_pose
from beaconland.imaging import (DEFAULT_K, DEFAULT_WINDOW, PnmError, SceneRenderConfig,
                                auto_exposure, auto_exposure_layers, compose,
                                detect_light_sources, distance_transform,
                                largest_saturated_component, max_dist, read_pbm, read_pgm,
                                render_frame, render_layers, write_pbm, write_pgm)
from beaconland.imaging.pnm import distance_to_pgm
from beaconland.world import generate_beacon_map

from oracles import blob_fixture, brute_force_detect, brute_force_edt, gaussian_blob

PROPS = settings(max_examples=1000, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow])

small_images = arrays(np.int64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
                      elements=st.integers(0, 20))
small_maps = arrays(bool, st.tuples(st.integers(1, 16), st.integers(1, 16)),
                    elements=st.booleans())


def _found(bmap):
    return {(int(r), int(c)) for r, c in zip(*np.nonzero(bmap))}


# -- detector ----------------------------------------------------------------

def test_constant_image_has_no_detections():
    bmap, dets = detect_light_sources(np.full((40, 50), 77, np.uint8))
    assert not bmap.any() and dets == []


def test_single_bright_pixel():
    img = np.zeros((21, 21), np.uint8)
    img[10, 12] = 200
    bmap, dets = detect_light_sources(img, 2.5, 15)
    assert dets == [(12, 10, 200.0)]
    assert bmap.sum() == 1 and bmap[10, 12]


def test_blob_fixture_yields_one_detection():
    bmap, dets = detect_light_sources(blob_fixture())
    assert [(d.u, d.v) for d in dets] == [(12, 17)]
    assert _found(bmap) == brute_force_detect(blob_fixture(), DEFAULT_K, DEFAULT_WINDOW)


def test_flat_plateau_gives_exactly_one_detection_at_lowest_index():
    img = np.zeros((30, 30), np.uint8)
    img[10:13, 14:16] = 240
    _, dets = detect_light_sources(img, 2.5, 15)
    assert [(d.u, d.v) for d in dets] == [(14, 10)]


def test_detections_sorted_by_intensity():
    img = np.zeros((40, 80), np.uint8)
    img[20, 10], img[20, 40], img[20, 70] = 100, 250, 180
    _, dets = detect_light_sources(img, 2.5, 15)
    assert [d.intensity for d in dets] == [250.0, 180.0, 100.0]


def test_border_pixel_uses_clipped_vicinity():
    img = np.zeros((20, 20), np.uint8)
    img[0, 0] = 90
    assert detect_light_sources(img, 2.5, 7)[1] == [(0, 0, 90.0)]
    assert _found(detect_light_sources(img, 2.5, 7)[0]) == brute_force_detect(img, 2.5, 7)


def test_threshold_is_strict():
    # one spike in a 3x3 vicinity: I - mean = 8/9 a, std = sqrt(8)/9 a -> ratio sqrt(8)
    img = np.zeros((3, 3), np.int64)
    img[1, 1] = 9
    assert detect_light_sources(img, math.sqrt(8) - 1e-9, 3)[1]
    assert not detect_light_sources(img, 3.0, 3)[1]


@pytest.mark.parametrize("k, window", [(0.0, 15), (2.5, 4), (2.5, 1)])
def test_bad_arguments(k, window):
    with pytest.raises(ValueError):
        detect_light_sources(np.zeros((5, 5)), k, window)


def test_float_image_matches_integer_path():
    rng = np.random.default_rng(4)
    img = rng.integers(0, 60, (40, 40))
    img[10, 10] = 255
    a = detect_light_sources(img, 2.0, 5)[0]
    b = detect_light_sources(img.astype(float), 2.0, 5)[0]
    assert np.array_equal(a, b)


@PROPS
@given(img=small_images, k=st.sampled_from([0.5, 1.0, 1.5, 2.5]),
       window=st.sampled_from([3, 5, 7]))
def test_detector_matches_brute_force(img, k, window):
    assert _found(detect_light_sources(img, k, window)[0]) == brute_force_detect(img, k, window)


@PROPS
@given(img=small_images, a=st.integers(1, 7), b=st.integers(-50, 50),
       k=st.sampled_from([1.0, 2.5]))
def test_detector_affine_invariance(img, a, b, k):
    ref = detect_light_sources(img, k, 3)[0]
    assert np.array_equal(detect_light_sources(a * img + b, k, 3)[0], ref)


@PROPS
@given(img=arrays(np.int64, (14, 14), elements=st.integers(0, 30)),
       r=st.integers(0, 13), c=st.integers(0, 13), noise=st.integers(0, 2 ** 31),
       window=st.sampled_from([3, 5]))
def test_detector_locality(img, r, c, noise, window):
    ref = detect_light_sources(img, 2.0, window)[0][r, c]
    rng = np.random.default_rng(noise)
    far = np.ones(img.shape, bool)
    far[max(r - window, 0):r + window + 1, max(c - window, 0):c + window + 1] = False
    changed = img.copy()
    changed[far] = rng.integers(0, 255, far.sum())
    assert detect_light_sources(changed, 2.0, window)[0][r, c] == ref


# -- distance transform ------------------------------------------------------

def test_distance_single_pixel():
    m = np.zeros((5, 6), bool)
    m[0, 0] = True
    d = distance_transform(m)
    assert d[4, 3] == 5.0 and d[0, 0] == 0.0


def test_distance_empty_map_is_max_dist():
    d = distance_transform(np.zeros((30, 40), bool))
    assert (d == max_dist((30, 40))).all() and max_dist((30, 40)) == 50.0


@PROPS
@given(m=small_maps)
def test_distance_matches_brute_force(m):
    np.testing.assert_allclose(distance_transform(m), brute_force_edt(m), atol=1e-9, rtol=0)


@PROPS
@given(m=small_maps.filter(lambda a: a.any()))
def test_distance_is_one_lipschitz(m):
    d = distance_transform(m)
    assert (np.abs(np.diff(d, axis=0)) <= 1 + 1e-12).all()
    assert (np.abs(np.diff(d, axis=1)) <= 1 + 1e-12).all()
    diag = np.abs(d[1:, 1:] - d[:-1, :-1])
    assert (diag <= math.sqrt(2) + 1e-12).all()
    assert (d[m] == 0).all() and (d[~m] >= 1).all()


# -- renderer and exposure ---------------------------------------------------

def _scene(fx=1200.0):
    cam = CameraModel(fx, fx, 320, 240, 640, 480, mount_pose(3.0))
    pose = Pose3.from_euler(0, 0, 0, (-500.0, 0.0, 30.0))
    return cam, pose, generate_beacon_map()


def test_render_trivial_uniform_frame():
    cam, pose, b = _scene()
    cfg = SceneRenderConfig(beacon_power=0, clutter_rate=0, background_sigma=0,
                            background_mean=37)
    assert (render_frame(cam, pose, b, cfg, 1) == 37).all()


def test_render_is_deterministic_per_seed():
    cam, pose, b = _scene()
    cfg = SceneRenderConfig()
    assert np.array_equal(render_frame(cam, pose, b, cfg, 5), render_frame(cam, pose, b, cfg, 5))
    assert not np.array_equal(render_frame(cam, pose, b, cfg, 5), render_frame(cam, pose, b, cfg, 6))


def test_beacon_peak_amplitude():
    cam, pose, b = _scene()
    cfg = SceneRenderConfig(beacon_power=1e6, clutter_rate=0, background_sigma=0,
                            background_mean=0, psf_sigma=0.5)
    _, src = render_layers(cam, pose, b, cfg, 0)
    # beacon at the origin, 500 m ahead and 20 m to the side
    rng_m = math.sqrt(500 ** 2 + 20 ** 2 + 30 ** 2)
    assert src.max() <= 1e6 / rng_m ** 2 * (1 + 1e-5)
    assert src.max() > 0.3 * 1e6 / rng_m ** 2


def test_render_gain_monotone():
    cam, pose, b = _scene()
    bg, src = render_layers(cam, pose, b, SceneRenderConfig(), 3)
    prev = compose(bg, src, 0.1)
    for g in (0.2, 0.5, 1.0, 3.0, 10.0):
        cur = compose(bg, src, g)
        assert (cur >= prev).all()
        prev = cur


@pytest.mark.parametrize("bad", [dict(psf_sigma=0), dict(background_sigma=-1),
                                 dict(clutter_rate=-1), dict(saturation=300)])
def test_render_config_validation(bad):
    with pytest.raises(ValueError):
        SceneRenderConfig(**bad)


def test_largest_saturated_component_uses_8_connectivity():
    f = np.zeros((10, 10), np.uint8)
    f[2, 2] = f[3, 3] = f[4, 4] = 255     # diagonal chain
    f[8, 8] = 255
    assert largest_saturated_component(f) == 3
    assert largest_saturated_component(np.zeros((4, 4))) == 0


def test_auto_exposure_returns_largest_feasible_gain():
    cam, pose, b = _scene()
    cfg = SceneRenderConfig(clutter_rate=0)
    bg, src = render_layers(cam, pose, b, cfg, 2)

    def probe(g):
        return compose(bg, src, g)
    g = auto_exposure(cam, probe, 4, (0.01, 100.0))
    assert largest_saturated_component(probe(g)) <= 4
    assert largest_saturated_component(probe(g * 1.001)) > 4


@pytest.mark.parametrize("seed, max_sat", [(0, 1), (1, 4), (2, 9), (3, 30)])
def test_layer_exposure_matches_full_render_search(seed, max_sat):
    cam, _, b = _scene()
    pose = Pose3.from_euler(0, 0, 0, (-150.0 - 100 * seed, 2.0, 10.0 + 5 * seed))
    bg, src = render_layers(cam, pose, b, SceneRenderConfig(), seed)
    full = auto_exposure(cam, lambda g: compose(bg, src, g), max_sat, (0.01, 20.0))
    assert auto_exposure_layers(bg, src, max_sat, (0.01, 20.0)) == full


def test_auto_exposure_upper_bound_and_infeasible():
    cam, pose, b = _scene()
    blank = np.zeros((480, 640), np.uint8)
    assert auto_exposure(cam, lambda g: blank, 4, (0.5, 2.0)) == 2.0
    full = np.full((480, 640), 255, np.uint8)
    with pytest.raises(NoFeasibleGain):
        auto_exposure(cam, lambda g: full, 4, (0.5, 2.0))


# -- PNM ---------------------------------------------------------------------

def test_pgm_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (13, 7)).astype(np.uint8)
    write_pgm(tmp_path / "a.pgm", img)
    assert np.array_equal(read_pgm(tmp_path / "a.pgm"), img)


def test_pbm_round_trip(tmp_path):
    m = np.random.default_rng(0).random((9, 21)) > 0.5
    write_pbm(tmp_path / "a.pbm", m)
    assert np.array_equal(read_pbm(tmp_path / "a.pbm"), m)


@pytest.mark.parametrize("data", [b"P4\nx 2\n\x00\x00", b"P4\n0 2\n", b"P4\n8 2\n\x00"])
def test_pbm_bad_header_or_raster(tmp_path, data):
    p = tmp_path / "b.pbm"
    p.write_bytes(data)
    with pytest.raises(PnmError):
        read_pbm(p)


def test_pgm_with_comment_header(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x01\xff")
    assert read_pgm(p).tolist() == [[1, 255]]


@pytest.mark.parametrize("data", [b"P2\n1 1\n255\n0", b"P5\n2 2\n255\n\x00", b"P5\n2", b""])
def test_malformed_pgm(tmp_path, data):
    p = tmp_path / "bad.pgm"
    p.write_bytes(data)
    with pytest.raises(PnmError):
        read_pgm(p)


def test_distance_to_pgm_scales():
    d = np.array([[0.0, 5.0], [10.0, 2.5]])
    assert distance_to_pgm(d).tolist() == [[0, 128], [255, 64]]
