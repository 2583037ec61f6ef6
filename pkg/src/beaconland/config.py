"""Run configuration: sectioned key/value INI files with units in key names.

Every key has a default, so an empty file (or an empty section) is a valid
configuration. Keys are addressed as ``section.key``, e.g.
``glide.speed_mps``.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .filter import InitPrior, ProcessNoise, StateVector, WeightParams
from .geometry import CameraModel, mount_pose
from .imaging.render import SceneRenderConfig
from .world import GlideConfig


def _key(doc, check=None):
    return {"doc": doc, "check": check}


def _positive(x):
    return None if x > 0 else "must be > 0"


def _non_negative(x):
    return None if x >= 0 else "must be >= 0"


@dataclass(frozen=True)
class RunSection:
    seed: int = field(default=7, metadata=_key("master RNG seed (64-bit)"))


@dataclass(frozen=True)
class GlideSection:
    start_distance_m: float = field(default=1000.0, metadata=_key(
        "horizontal distance from the threshold at the first frame", _positive))
    start_altitude_m: float = field(default=60.0, metadata=_key(
        "altitude at the first frame", _positive))
    glide_angle_deg: float = field(default=math.degrees(math.atan2(60.0, 1000.0)), metadata=_key(
        "descent angle; default puts touchdown on the threshold"))
    speed_mps: float = field(default=30.0, metadata=_key("speed along the glide line", _positive))
    frame_rate_hz: float = field(default=10.0, metadata=_key("camera frame rate", _positive))
    lateral_offset_m: float = field(default=0.0, metadata=_key("initial cross-track offset"))
    heading_offset_deg: float = field(default=0.0, metadata=_key("initial heading offset"))


@dataclass(frozen=True)
class BeaconSection:
    count: int = field(default=16, metadata=_key("number of beacons (even, >= 4)"))
    spacing_m: float = field(default=50.0, metadata=_key("along-runway spacing", _positive))
    runway_width_m: float = field(default=40.0, metadata=_key("distance between the two lines", _positive))


@dataclass(frozen=True)
class CameraSection:
    fx_px: float = field(default=2400.0, metadata=_key("focal length x", _positive))
    fy_px: float = field(default=2400.0, metadata=_key("focal length y", _positive))
    cx_px: float = field(default=320.0, metadata=_key("principal point x"))
    cy_px: float = field(default=240.0, metadata=_key("principal point y"))
    width_px: int = field(default=640, metadata=_key("image width", _positive))
    height_px: int = field(default=480, metadata=_key("image height", _positive))
    mount_tilt_deg: float = field(default=3.0, metadata=_key("optical axis tilt below body X"))
    exposure_gain: float = field(default=1.0, metadata=_key(
        "fixed gain (used when exposure.auto is false)", _positive))


@dataclass(frozen=True)
class RenderSection:
    beacon_power: float = field(default=6.0e7, metadata=_key(
        "beacon peak intensity at 1 m and unit gain", _non_negative))
    psf_sigma_px: float = field(default=0.6, metadata=_key("Gaussian spot sigma", _positive))
    background_mean: float = field(default=20.0, metadata=_key("background level"))
    background_sigma: float = field(default=5.0, metadata=_key("std of the smooth background field", _non_negative))
    background_corr_px: float = field(default=3.0, metadata=_key(
        "background correlation length; 0 gives i.i.d. pixels", _non_negative))
    sensor_noise_sigma: float = field(default=0.0, metadata=_key(
        "i.i.d. per-pixel noise on top of the background", _non_negative))
    clutter_rate: float = field(default=5.0, metadata=_key("mean clutter spots per frame", _non_negative))
    clutter_power_min: float = field(default=20.0, metadata=_key("clutter peak range, low end", _non_negative))
    clutter_power_max: float = field(default=150.0, metadata=_key("clutter peak range, high end", _non_negative))
    saturation: float = field(default=255.0, metadata=_key("sensor full scale"))


@dataclass(frozen=True)
class ExposureSection:
    auto: bool = field(default=True, metadata=_key("search the exposure gain every frame"))
    max_sat_component_px2: int = field(default=1, metadata=_key(
        "largest allowed saturated 8-connected blob", _non_negative))
    gain_min: float = field(default=0.01, metadata=_key("lower gain bound", _positive))
    gain_max: float = field(default=20.0, metadata=_key("upper gain bound", _positive))


@dataclass(frozen=True)
class ImuSection:
    yaw_sigma_deg: float = field(default=0.05, metadata=_key("yaw random-walk sigma per frame", _non_negative))
    yaw_bias_deg: float = field(default=2.0, metadata=_key("constant yaw bias"))
    attitude_sigma_deg: float = field(default=0.05, metadata=_key("roll/pitch white noise sigma", _non_negative))


@dataclass(frozen=True)
class DetectorSection:
    k: float = field(default=2.5, metadata=_key("threshold in vicinity standard deviations", _positive))
    window_px: int = field(default=7, metadata=_key("vicinity size (odd, >= 3)"))


@dataclass(frozen=True)
class FilterSection:
    particles: int = field(default=1000, metadata=_key("number of particles", _positive))
    init_offset: bool = field(default=True, metadata=_key(
        "draw the navigation prior mean away from truth using the prior sigmas"))
    planar_sigma_m: float = field(default=100.0, metadata=_key("prior sigma, x and y", _non_negative))
    elevation_sigma_m: float = field(default=10.0, metadata=_key("prior sigma, z", _non_negative))
    azimuth_sigma_deg: float = field(default=3.0, metadata=_key("prior sigma, yaw", _non_negative))
    theta_sigma_deg: float = field(default=1.0, metadata=_key("prior sigma, travel azimuth", _non_negative))
    phi_sigma_deg: float = field(default=1.0, metadata=_key("prior sigma, travel pitch", _non_negative))
    speed_sigma_frac: float = field(default=0.05, metadata=_key("prior sigma of speed, fraction", _non_negative))
    yaw_noise_deg: float = field(default=0.2, metadata=_key("process noise per step, yaw", _non_negative))
    theta_noise_deg: float = field(default=0.3, metadata=_key("process noise per step, travel azimuth", _non_negative))
    phi_noise_deg: float = field(default=0.3, metadata=_key("process noise per step, travel pitch", _non_negative))
    speed_noise_mps: float = field(default=0.3, metadata=_key("process noise per step, speed", _non_negative))
    P_px: float = field(default=4.0, metadata=_key("weight kernel distance scale", _positive))
    q: float = field(default=1.0, metadata=_key("weight kernel exponent", _positive))
    offscreen_distance_px: float = field(default=100.0, metadata=_key(
        "distance charged to beacons projecting off-frame", _positive))
    weight_sign: float = field(default=-1.0, metadata=_key(
        "-1: exp(-sum) favours small distances; +1: exp(+sum)"))
    resample_threshold: float = field(default=0.5, metadata=_key(
        "resample when ESS < threshold * N", _non_negative))
    jitter_bandwidth: float = field(default=0.4, metadata=_key(
        "kernel jitter after resampling, in units of the cloud's spread (0 = off)",
        _non_negative))


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = RunSection()
    glide: GlideSection = GlideSection()
    beacons: BeaconSection = BeaconSection()
    camera: CameraSection = CameraSection()
    render: RenderSection = RenderSection()
    exposure: ExposureSection = ExposureSection()
    imu: ImuSection = ImuSection()
    detector: DetectorSection = DetectorSection()
    filter: FilterSection = FilterSection()

    @property
    def seed(self):
        return self.run.seed

    # -- domain objects -------------------------------------------------
    def glide_config(self):
        g = self.glide
        return GlideConfig(g.start_distance_m, g.start_altitude_m, g.glide_angle_deg,
                           g.speed_mps, g.frame_rate_hz, g.lateral_offset_m,
                           g.heading_offset_deg)

    def camera_model(self):
        c = self.camera
        return CameraModel(c.fx_px, c.fy_px, c.cx_px, c.cy_px, c.width_px, c.height_px,
                           mount_pose(c.mount_tilt_deg), c.exposure_gain)

    def render_config(self):
        r = self.render
        return SceneRenderConfig(r.beacon_power, r.psf_sigma_px, r.background_mean,
                                 r.background_sigma, r.clutter_rate,
                                 (r.clutter_power_min, r.clutter_power_max), r.saturation,
                                 r.background_corr_px, r.sensor_noise_sigma)

    def init_prior(self, mean_state: StateVector):
        f = self.filter
        return InitPrior(mean_state, f.planar_sigma_m, f.elevation_sigma_m, f.azimuth_sigma_deg,
                         f.theta_sigma_deg, f.phi_sigma_deg, f.speed_sigma_frac)

    def process_noise(self):
        f = self.filter
        return ProcessNoise(f.yaw_noise_deg, f.theta_noise_deg, f.phi_noise_deg, f.speed_noise_mps)

    def weight_params(self):
        f = self.filter
        return WeightParams(f.P_px, f.q, f.offscreen_distance_px, f.weight_sign)


def _section_types():
    return {f.name: type(getattr(RunConfig(), f.name)) for f in dataclasses.fields(RunConfig)}


def valid_keys():
    keys = []
    for sec, cls in _section_types().items():
        keys.extend(f"{sec}.{f.name}" for f in dataclasses.fields(cls))
    return keys


def _field(key):
    try:
        sec, name = key.split(".", 1)
        cls = _section_types()[sec]
        return sec, next(f for f in dataclasses.fields(cls) if f.name == name)
    except (ValueError, KeyError, StopIteration):
        raise ConfigError(key, "unknown key") from None


def _parse(key, f, raw):
    t = type(f.default)
    text = str(raw).strip()
    try:
        if t is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if t is int:
            return int(text, 0)
        if key == "filter.weight_sign" and text in ("+", "-"):
            return 1.0 if text == "+" else -1.0
        return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {t.__name__}") from None


def with_value(cfg: RunConfig, key, value) -> RunConfig:
    """Copy of ``cfg`` with one dotted key replaced (value may be a string)."""
    sec, f = _field(key)
    if isinstance(value, str) or type(value) is not type(f.default):
        value = _parse(key, f, value)
    section = dataclasses.replace(getattr(cfg, sec), **{f.name: value})
    return dataclasses.replace(cfg, **{sec: section})


def validate(cfg: RunConfig) -> RunConfig:
    for key in valid_keys():
        sec, f = _field(key)
        check = f.metadata.get("check")
        if check is not None:
            msg = check(getattr(getattr(cfg, sec), f.name))
            if msg:
                raise ConfigError(key, msg)
    w = cfg.detector.window_px
    if w < 3 or w % 2 == 0:
        raise ConfigError("detector.window_px", "must be odd and >= 3")
    b = cfg.beacons.count
    if b < 4 or b % 2:
        raise ConfigError("beacons.count", "must be even and >= 4")
    if cfg.filter.weight_sign not in (-1.0, 1.0):
        raise ConfigError("filter.weight_sign", "must be +1 or -1")
    if cfg.exposure.gain_min > cfg.exposure.gain_max:
        raise ConfigError("exposure.gain_min", "must not exceed exposure.gain_max")
    if cfg.render.clutter_power_min > cfg.render.clutter_power_max:
        raise ConfigError("render.clutter_power_min", "must not exceed render.clutter_power_max")
    for key, build in (("glide", cfg.glide_config), ("camera", cfg.camera_model),
                       ("render", cfg.render_config), ("filter", cfg.weight_params)):
        try:
            build()
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    return cfg


def loads(text, base: RunConfig | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    cfg = base or RunConfig()
    for sec in parser.sections():
        for name, raw in parser.items(sec):
            cfg = with_value(cfg, f"{sec}.{name}", raw)
    return validate(cfg)


def load(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("<file>", f"config file not found: {p}")
    return loads(p.read_text())


def dumps(cfg: RunConfig = RunConfig()) -> str:
    """INI text listing every key with its value and a one-line description."""
    out = []
    for sec in _section_types():
        section = getattr(cfg, sec)
        out.append(f"[{sec}]")
        for f in dataclasses.fields(section):
            val = getattr(section, f.name)
            if isinstance(val, bool):
                text = "true" if val else "false"
            else:
                text = repr(val)
            out.append(f"# {f.metadata.get('doc', '')}")
            out.append(f"{f.name} = {text}")
        out.append("")
    return "\n".join(out)
