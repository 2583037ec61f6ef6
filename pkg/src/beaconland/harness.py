"""Closed-loop simulation driver, trajectory log and deviation metrics."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .config import RunConfig, validate
from .errors import AllZeroWeights, EmptyBand, MalformedLog, NoFeasibleGain
from .filter import (StateVector, estimate, init_particles, predict, regularize, resample,
                     weigh)
from .geometry import wrap_deg
from .imaging import (auto_exposure_layers, compose, detect_light_sources, distance_transform,
                      render_layers)
from .world import (generate_beacon_map, generate_glide_trajectory, rng_for,
                    synthesize_imu)

log = logging.getLogger(__name__)

LOG_COLUMNS = ("t_s", "truth_x_m", "truth_y_m", "truth_z_m", "truth_yaw_deg",
               "est_x_m", "est_y_m", "est_z_m", "est_yaw_deg",
               "err_pos_m", "err_yaw_deg", "ess", "frame_ms")
METRICS_COLUMNS = ("band_m", "max_linear_dev_m", "max_orient_dev_deg")
DEFAULT_BANDS = (500.0, 100.0, 10.0)


class LogRecord(NamedTuple):
    t_s: float
    truth_x_m: float
    truth_y_m: float
    truth_z_m: float
    truth_yaw_deg: float
    est_x_m: float
    est_y_m: float
    est_z_m: float
    est_yaw_deg: float
    err_pos_m: float
    err_yaw_deg: float
    ess: float
    frame_ms: float

    @property
    def truth_position(self):
        return np.array([self.truth_x_m, self.truth_y_m, self.truth_z_m])

    @property
    def axis_error(self):
        return np.array([self.est_x_m - self.truth_x_m, self.est_y_m - self.truth_y_m,
                         self.est_z_m - self.truth_z_m])


@dataclass
class TrajectoryLog:
    records: list = field(default_factory=list)
    touchdown: np.ndarray = field(default_factory=lambda: np.zeros(3))
    diverged_frames: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def diverged(self):
        return bool(self.diverged_frames)

    def deterministic_rows(self):
        """Records without the wall-clock column."""
        return [r[:-1] for r in self.records]


@dataclass
class FrameArtifacts:
    image: np.ndarray
    binary_map: np.ndarray
    distance_map: np.ndarray
    gain: float


def truth_state(truth, k):
    """Filter-state view of truth record ``k`` (travel direction from the
    neighbouring record)."""
    rec = truth[k]
    j0, j1 = (k, k + 1) if k + 1 < len(truth) else (k - 1, k)
    d = truth[j1].position - truth[j0].position
    horiz = math.hypot(d[0], d[1])
    theta = math.degrees(math.atan2(d[1], d[0]))
    phi = math.degrees(math.atan2(-d[2], horiz))
    yaw = rec.pose.euler()[0]
    return StateVector(rec.position, yaw, theta, phi, rec.speed)


def _prior_mean(cfg: RunConfig, truth_state0, seed):
    f = cfg.filter
    if not f.init_offset:
        return truth_state0
    rng = rng_for(seed, "nav-prior")
    off = rng.standard_normal(4) * [f.planar_sigma_m, f.planar_sigma_m,
                                    f.elevation_sigma_m, f.azimuth_sigma_deg]
    return StateVector(truth_state0.position + off[:3], truth_state0.yaw + off[3],
                       truth_state0.theta, truth_state0.phi, truth_state0.speed)


def run_simulation(cfg: RunConfig, on_frame=None) -> TrajectoryLog:
    """Render, detect and track one synthetic approach.

    ``on_frame(k, FrameArtifacts)`` is called after each frame is processed
    (used for debug dumps).
    """
    validate(cfg)
    seed = cfg.seed
    camera = cfg.camera_model()
    beacons = generate_beacon_map(cfg.beacons.count, cfg.beacons.spacing_m,
                                  cfg.beacons.runway_width_m)
    glide = cfg.glide_config()
    render_cfg = cfg.render_config()
    truth = generate_glide_trajectory(glide)
    imu = synthesize_imu(truth, cfg.imu.yaw_sigma_deg, cfg.imu.yaw_bias_deg,
                         cfg.imu.attitude_sigma_deg, seed=rng_for(seed, "imu"))
    prior = cfg.init_prior(_prior_mean(cfg, truth_state(truth, 0), seed))
    ps = init_particles(prior, cfg.filter.particles, rng_for(seed, "init"))
    filter_rng = rng_for(seed, "filter")
    noise = cfg.process_noise()
    wp = cfg.weight_params()
    exp_cfg = cfg.exposure

    out = TrajectoryLog(touchdown=glide.touchdown)
    for k, rec in enumerate(truth):
        bg, src = render_layers(camera, rec.pose, beacons, render_cfg, rng_for(seed, "render", k))
        gain = camera.exposure_gain
        if exp_cfg.auto:
            try:
                gain = auto_exposure_layers(
                    bg, src, exp_cfg.max_sat_component_px2,
                    (exp_cfg.gain_min, exp_cfg.gain_max), render_cfg.saturation)
            except NoFeasibleGain:
                gain = exp_cfg.gain_min
        frame = compose(bg, src, gain, render_cfg.saturation)

        t0 = time.perf_counter()
        bmap, _ = detect_light_sources(frame, cfg.detector.k, cfg.detector.window_px)
        dmap = distance_transform(bmap)
        if k > 0:
            ps = predict(ps, wrap_deg(imu[k].yaw - imu[k - 1].yaw), rec.t - truth[k - 1].t,
                         noise, filter_rng)
        try:
            ps = weigh(ps, dmap, camera, imu[k], beacons, wp)
        except AllZeroWeights as exc:
            log.warning("frame %d: all weights underflowed, resetting", k)
            ps = exc.recovered
            out.diverged_frames.append(k)
        ess = ps.ess
        resampled = resample(ps, filter_rng, cfg.filter.resample_threshold)
        if resampled is not ps:
            resampled = regularize(resampled, cfg.filter.jitter_bandwidth, filter_rng)
        ps = resampled
        est, _ = estimate(ps)
        frame_ms = (time.perf_counter() - t0) * 1e3

        tp = rec.position
        tyaw = rec.pose.euler()[0]
        out.records.append(LogRecord(
            rec.t, *map(float, tp), tyaw, *map(float, est.position), est.yaw,
            float(np.linalg.norm(est.position - tp)), abs(wrap_deg(est.yaw - tyaw)),
            ess, frame_ms))
        if on_frame is not None:
            on_frame(k, FrameArtifacts(frame, bmap, dmap, gain))
    return out


# -- metrics ---------------------------------------------------------------

@dataclass(frozen=True)
class MetricsRow:
    band_m: float
    max_linear_dev_m: float
    max_orient_dev_deg: float


def distances_to_touchdown(log_: TrajectoryLog, touchdown=None):
    td = np.asarray(log_.touchdown if touchdown is None else touchdown, dtype=float)
    pos = np.array([[r.truth_x_m, r.truth_y_m, r.truth_z_m] for r in log_.records])
    return np.linalg.norm(pos - td, axis=1)


def compute_metrics(log_: TrajectoryLog, bands: Sequence[float] = DEFAULT_BANDS,
                    touchdown=None, nested=False) -> list[MetricsRow]:
    """Worst deviation per distance band.

    Band ``bands[i]`` covers frames with ``bands[i+1] < distance <= bands[i]``;
    the last band runs down to touchdown. With ``nested=True`` each band
    instead covers every frame with ``distance <= bands[i]``.
    """
    if not log_.records:
        raise ValueError("empty trajectory log")
    bands = [float(b) for b in bands]
    if not bands or any(a <= b for a, b in zip(bands, bands[1:])):
        raise ValueError("bands must be non-empty and strictly descending")
    dist = distances_to_touchdown(log_, touchdown)
    lin = np.array([r.err_pos_m for r in log_.records])
    ang = np.array([r.err_yaw_deg for r in log_.records])
    rows = []
    for i, hi in enumerate(bands):
        lo = bands[i + 1] if i + 1 < len(bands) and not nested else -math.inf
        sel = (dist <= hi) & (dist > lo)
        if not sel.any():
            raise EmptyBand(f"no frames within band {hi:g} m")
        rows.append(MetricsRow(hi, float(lin[sel].max()), float(ang[sel].max())))
    return rows


# -- CSV io ----------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def write_log(path, log_: TrajectoryLog):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(LOG_COLUMNS) + "\n")
        for r in log_.records:
            fh.write(",".join(_fmt(x) for x in r) + "\n")


def read_log(path) -> TrajectoryLog:
    """Parse a trajectory CSV; every line, including the last, must end in a
    newline, so a cut-off file is reported rather than silently shortened."""
    text = Path(path).read_text()
    if not text:
        raise MalformedLog("empty file", line=1)
    lines = text.split("\n")
    if lines[-1] != "":
        raise MalformedLog("truncated final line (no newline)", line=len(lines))
    lines = lines[:-1]
    if lines[0].strip().split(",") != list(LOG_COLUMNS):
        raise MalformedLog("unexpected header", line=1)
    out = TrajectoryLog()
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(LOG_COLUMNS):
            raise MalformedLog(f"expected {len(LOG_COLUMNS)} fields, got {len(parts)}", line=i)
        try:
            out.records.append(LogRecord(*(float(p) for p in parts)))
        except ValueError as exc:
            raise MalformedLog(str(exc), line=i) from None
    return out


def write_metrics(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for r in rows:
            fh.write(f"{_fmt(r.band_m)},{_fmt(r.max_linear_dev_m)},{_fmt(r.max_orient_dev_deg)}\n")


def format_metrics(rows):
    lines = [f"{'band_m':>8} {'max_linear_dev_m':>17} {'max_orient_dev_deg':>19}"]
    for r in rows:
        lines.append(f"{r.band_m:8.0f} {r.max_linear_dev_m:17.3f} {r.max_orient_dev_deg:19.3f}")
    return "\n".join(lines)
