"""Parametric synthetic camera frames: beacons, clutter and sensor noise.

Each beacon is an isotropic Gaussian spot whose peak is
``gain * beacon_power / range**2``. Clutter spots appear at uniformly random
positions with a Poisson-distributed count. The background is a constant
level plus a smooth Gaussian random field (standard deviation
``background_sigma``, correlation length ``background_corr_px``), optionally
with i.i.d. per-pixel sensor noise on top. The sum is clamped to
``[0, saturation]`` and rounded to 8 bits.

Per-pixel white noise of any amplitude makes the k-sigma local-maximum
detector fire on roughly one noise peak per vicinity, because the test is
invariant to the noise scale; ``sensor_noise_sigma`` therefore defaults to 0.

Rendering is split into a gain-independent stage (:func:`render_layers`) and
:func:`compose`, so exposure search can re-expose one noise realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix

from ..geometry import CameraModel, Pose3


@dataclass(frozen=True)
class SceneRenderConfig:
    beacon_power: float = 6.0e7
    psf_sigma: float = 0.6
    background_mean: float = 20.0
    background_sigma: float = 5.0
    clutter_rate: float = 5.0
    clutter_power_range: tuple[float, float] = (20.0, 150.0)
    saturation: float = 255.0
    background_corr_px: float = 3.0
    sensor_noise_sigma: float = 0.0

    def __post_init__(self):
        if not self.psf_sigma > 0:
            raise ValueError("psf_sigma must be positive")
        if self.background_sigma < 0 or self.sensor_noise_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        if self.background_corr_px < 0:
            raise ValueError("background_corr_px must be non-negative")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be non-negative")
        if self.beacon_power < 0:
            raise ValueError("beacon_power must be non-negative")
        lo, hi = self.clutter_power_range
        if not 0 <= lo <= hi:
            raise ValueError("clutter_power_range must be an ordered pair >= 0")
        if not 0 < self.saturation <= 255:
            raise ValueError("saturation must lie in (0, 255]")


def beacon_image_positions(camera: CameraModel, pose: Pose3, points3d):
    """Pinhole projection used by the renderer.

    Returns ``(uv, range_m, in_front)``.
    """
    cam = camera.world_pose(pose)
    rel = np.asarray(points3d, dtype=float) - cam.translation
    pc = rel @ cam.rotation
    z = pc[:, 2]
    in_front = z > 0
    zs = np.where(in_front, z, 1.0)
    uv = np.column_stack([camera.fx * pc[:, 0] / zs + camera.cx,
                          camera.fy * pc[:, 1] / zs + camera.cy])
    return uv, np.linalg.norm(rel, axis=1), in_front


def stamp_gaussian(layer, u, v, amplitude, sigma):
    """Add a Gaussian spot centred at sub-pixel ``(u, v)`` (pixel centers at
    integer coordinates)."""
    h, w = layer.shape
    r = int(math.ceil(4.0 * sigma))
    c0, c1 = max(int(math.floor(u)) - r, 0), min(int(math.floor(u)) + r + 2, w)
    r0, r1 = max(int(math.floor(v)) - r, 0), min(int(math.floor(v)) + r + 2, h)
    if c0 >= c1 or r0 >= r1:
        return
    xs = np.arange(c0, c1) - u
    ys = np.arange(r0, r1) - v
    gx = np.exp(-0.5 * (xs / sigma) ** 2)
    gy = np.exp(-0.5 * (ys / sigma) ** 2)
    layer[r0:r1, c0:c1] += (amplitude * np.outer(gy, gx)).astype(layer.dtype)


@lru_cache(maxsize=8)
def _smoothing_matrix(n, corr):
    """Sparse map from a coarse white-noise grid (spacing ``corr``) to ``n``
    samples of a Gaussian-smoothed field; the kernel is cut at 4 sigma."""
    m = int(math.ceil(n / corr)) + 5
    grid = (np.arange(m) - 2.0) * corr
    x = np.arange(n, dtype=float)
    d = (x[:, None] - grid[None, :]) / corr
    k = np.where(np.abs(d) <= 4.0, np.exp(-0.5 * d * d), 0.0)
    return csr_matrix(k)


def smooth_field(rng, shape, corr):
    """Zero-mean, unit-variance smooth random field; white noise if corr is 0."""
    if corr <= 0:
        return rng.standard_normal(shape)
    ky = _smoothing_matrix(shape[0], float(corr))
    kx = _smoothing_matrix(shape[1], float(corr))
    coarse = rng.standard_normal((ky.shape[1], kx.shape[1]))
    f = ky @ (kx @ coarse.T).T
    f -= f.mean()
    sd = f.std()
    return f / sd if sd > 0 else f


def render_layers(camera, truth_pose, beacons, cfg: SceneRenderConfig, seed):
    """Gain-independent parts of a frame: ``(background, sources)``.

    ``sources`` holds beacon and clutter light at unit exposure gain.
    """
    rng = np.random.default_rng(seed)
    shape = (camera.height, camera.width)
    background = np.full(shape, cfg.background_mean, dtype=np.float32)
    field = smooth_field(rng, shape, cfg.background_corr_px)
    background += (cfg.background_sigma * field).astype(np.float32)
    if cfg.sensor_noise_sigma > 0:
        background += cfg.sensor_noise_sigma * rng.standard_normal(shape, dtype=np.float32)

    sources = np.zeros(shape, dtype=np.float32)
    uv, rng_m, front = beacon_image_positions(camera, truth_pose, beacons.points3d)
    if cfg.beacon_power > 0:
        for (u, v), dist, ok in zip(uv, rng_m, front):
            if ok and 0 <= u < camera.width and 0 <= v < camera.height:
                stamp_gaussian(sources, u, v, cfg.beacon_power / dist ** 2, cfg.psf_sigma)

    n_clutter = rng.poisson(cfg.clutter_rate) if cfg.clutter_rate > 0 else 0
    cu = rng.uniform(0, camera.width, n_clutter)
    cv = rng.uniform(0, camera.height, n_clutter)
    lo, hi = cfg.clutter_power_range
    cp = rng.uniform(lo, hi, n_clutter)
    for u, v, a in zip(cu, cv, cp):
        stamp_gaussian(sources, u, v, a, cfg.psf_sigma)
    return background, sources


def compose(background, sources, gain, saturation=255.0):
    """Expose, clamp and quantize to an 8-bit frame."""
    f = sources * np.float32(gain)
    f += background
    np.clip(f, 0.0, saturation, out=f)
    np.rint(f, out=f)
    return f.astype(np.uint8)


def render_frame(camera, truth_pose, beacons, cfg: SceneRenderConfig, seed):
    bg, src = render_layers(camera, truth_pose, beacons, cfg, seed)
    return compose(bg, src, camera.exposure_gain, cfg.saturation)
