"""Particle filter over the UAV state (position, yaw, travel azimuth/pitch, speed).

Roll and pitch are not estimated: every hypothesis borrows them from the
IMU sample of the current frame.

Measurement kernel
------------------
Each beacon contributes ``d / (d + P)**q`` where ``d`` is the distance-map
value under its projection. The per-particle factor is
``exp(sign * sum_i d_i / (d_i + P)**q)`` with ``sign = -1`` by default, so a
perfect match (all ``d_i = 0``) scores highest. For ``q > 1`` the per-beacon
penalty rises until the turnover distance ``d* = P / (q - 1)`` and falls
after it; for ``q <= 1`` it is monotone over all ``d >= 0`` and bounded by 1
when ``q == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AllZeroWeights
from .geometry import LIFT, euler_to_rotation, projection_prefix, wrap_deg


@dataclass(frozen=True)
class StateVector:
    position: np.ndarray
    yaw: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    speed: float = 0.0

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        p.setflags(write=False)
        object.__setattr__(self, "position", p)
        for name in ("yaw", "theta", "phi"):
            object.__setattr__(self, name, wrap_deg(getattr(self, name)))
        if self.speed < 0:
            raise ValueError("speed must be non-negative")


@dataclass(frozen=True)
class ParticleSet:
    """Hypotheses stored column-wise; treat as immutable."""

    position: np.ndarray  # (N, 3) meters
    yaw: np.ndarray       # (N,) degrees
    theta: np.ndarray     # (N,) degrees
    phi: np.ndarray       # (N,) degrees
    speed: np.ndarray     # (N,) m/s
    weights: np.ndarray   # (N,)

    def __len__(self):
        return len(self.weights)

    @property
    def ess(self):
        return float(1.0 / np.sum(self.weights ** 2))

    def state(self, i):
        return StateVector(self.position[i], self.yaw[i], self.theta[i],
                           self.phi[i], self.speed[i])

    def take(self, idx):
        n = len(idx)
        return ParticleSet(self.position[idx], self.yaw[idx], self.theta[idx],
                           self.phi[idx], self.speed[idx], np.full(n, 1.0 / n))

    def with_weights(self, w):
        return replace(self, weights=w)

    def equals(self, other):
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("position", "yaw", "theta", "phi", "speed", "weights"))


@dataclass(frozen=True)
class InitPrior:
    mean_state: StateVector
    planar_sigma: float = 100.0
    elevation_sigma: float = 10.0
    azimuth_sigma: float = 3.0
    theta_sigma: float = 1.0
    phi_sigma: float = 1.0
    speed_sigma_frac: float = 0.05

    def __post_init__(self):
        sig = (self.planar_sigma, self.elevation_sigma, self.azimuth_sigma,
               self.theta_sigma, self.phi_sigma, self.speed_sigma_frac)
        if min(sig) < 0:
            raise ValueError("prior sigmas must be non-negative")


@dataclass(frozen=True)
class ProcessNoise:
    """Per-step standard deviations of the random-walk process noise."""

    yaw: float = 0.2
    theta: float = 0.3
    phi: float = 0.3
    speed: float = 0.3


@dataclass(frozen=True)
class WeightParams:
    P: float = 4.0
    q: float = 1.0
    offscreen_distance: float = 100.0
    sign: float = -1.0

    def __post_init__(self):
        if not (self.P > 0 and self.q > 0 and self.offscreen_distance > 0):
            raise ValueError("P, q and offscreen_distance must be positive")
        if self.sign not in (-1.0, 1.0):
            raise ValueError("sign must be +1 or -1")

    @property
    def turnover(self):
        """Distance where the per-beacon penalty peaks (inf when q <= 1)."""
        return self.P / (self.q - 1.0) if self.q > 1 else float("inf")


def init_particles(prior: InitPrior, n: int, seed) -> ParticleSet:
    if n < 1:
        raise ValueError("need at least one particle")
    rng = np.random.default_rng(seed)
    m = prior.mean_state
    scale = np.array([prior.planar_sigma, prior.planar_sigma, prior.elevation_sigma])
    pos = m.position + rng.standard_normal((n, 3)) * scale
    yaw = wrap_deg(m.yaw + rng.standard_normal(n) * prior.azimuth_sigma)
    theta = wrap_deg(m.theta + rng.standard_normal(n) * prior.theta_sigma)
    phi = wrap_deg(m.phi + rng.standard_normal(n) * prior.phi_sigma)
    speed = np.maximum(m.speed + rng.standard_normal(n) * prior.speed_sigma_frac * m.speed, 0.0)
    return ParticleSet(pos, yaw, theta, phi, speed, np.full(n, 1.0 / n))


def travel_direction(theta, phi):
    """Unit travel vector for azimuth ``theta`` and pitch ``phi`` (degrees,
    positive pitch = descending)."""
    th, ph = np.radians(theta), np.radians(phi)
    return np.stack([np.cos(ph) * np.cos(th), np.cos(ph) * np.sin(th), -np.sin(ph)], axis=-1)


def predict(ps: ParticleSet, imu_yaw_delta, dt, noise: ProcessNoise = ProcessNoise(),
            seed=None) -> ParticleSet:
    """Propagate every hypothesis by one time step; weights are untouched."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    rng = np.random.default_rng(seed)
    n = len(ps)
    yaw = wrap_deg(ps.yaw + imu_yaw_delta + rng.standard_normal(n) * noise.yaw)
    theta = wrap_deg(ps.theta + rng.standard_normal(n) * noise.theta)
    phi = wrap_deg(ps.phi + rng.standard_normal(n) * noise.phi)
    speed = np.maximum(ps.speed + rng.standard_normal(n) * noise.speed, 0.0)
    step = travel_direction(theta, phi) * (speed * dt)[:, None]
    return ParticleSet(ps.position + step, yaw, theta, phi, speed, ps.weights)


def beacon_penalty(d, P, q):
    d = np.asarray(d, dtype=float)
    return d / (d + P) ** q


def particle_homographies(ps: ParticleSet, camera, imu):
    """Ground-to-image homography of every hypothesis, shape (N, 3, 3)."""
    r = euler_to_rotation(ps.yaw, imu.pitch, imu.roll)           # body -> world
    rt = np.swapaxes(r, 1, 2)
    t_inv = -np.einsum("nij,nj->ni", rt, ps.position)
    # world->body transform times the ground lifter: columns r1, r2, t
    m = np.empty((len(ps), 4, 3))
    m[:, :3, 0] = rt[:, :, 0]
    m[:, :3, 1] = rt[:, :, 1]
    m[:, :3, 2] = t_inv
    m[:, 3, :] = LIFT[3]
    return np.einsum("ij,njk->nik", projection_prefix(camera), m)


def projected_distances(ps, dmap, camera, imu, beacons, offscreen_distance):
    """Distance-map value under each projected beacon, shape (N, B).

    Projections are read at the nearest pixel; beacons behind the camera or
    outside the frame get ``offscreen_distance``. A hypothesis whose camera
    is not above the ground sees nothing.
    """
    h = particle_homographies(ps, camera, imu)
    pts = np.column_stack([beacons.positions, np.ones(len(beacons.positions))])
    ph = np.einsum("nij,bj->nbi", h, pts)
    w = ph[..., 2]
    front = w > 0
    ws = np.where(front, w, 1.0)
    u = ph[..., 0] / ws
    v = ph[..., 1] / ws
    vis = front & (u >= 0) & (u < camera.width) & (v >= 0) & (v < camera.height)
    cam_z = ps.position[:, 2] + euler_to_rotation(ps.yaw, imu.pitch, imu.roll)[:, 2, :] @ camera.mount.translation
    vis &= (cam_z > 0)[:, None]
    col = np.clip(np.floor(np.where(vis, u, 0.0) + 0.5).astype(np.intp), 0, camera.width - 1)
    row = np.clip(np.floor(np.where(vis, v, 0.0) + 0.5).astype(np.intp), 0, camera.height - 1)
    return np.where(vis, dmap[row, col], offscreen_distance)


def weigh(ps: ParticleSet, dmap, camera, imu, beacons, wp: WeightParams = WeightParams()):
    """Multiply each weight by the distance-map match factor and normalize.

    Runs in the log domain. Raises :class:`AllZeroWeights` (with the
    uniform-weight set attached) if no particle keeps a positive weight.
    """
    d = projected_distances(ps, dmap, camera, imu, beacons, wp.offscreen_distance)
    score = beacon_penalty(d, wp.P, wp.q).sum(axis=1)
    with np.errstate(divide="ignore"):
        logw = np.log(ps.weights) + wp.sign * score
    finite = np.isfinite(logw)
    if not finite.any():
        n = len(ps)
        raise AllZeroWeights("all particle weights underflowed",
                             recovered=ps.with_weights(np.full(n, 1.0 / n)))
    logw = np.where(finite, logw, -np.inf)
    w = np.exp(logw - logw.max())
    return ps.with_weights(w / w.sum())


def resample(ps: ParticleSet, seed=None, threshold=0.5) -> ParticleSet:
    """Systematic resampling, only when ESS drops below ``threshold * N``."""
    n = len(ps)
    if ps.ess >= threshold * n:
        return ps
    rng = np.random.default_rng(seed)
    positions = (rng.uniform() + np.arange(n)) / n
    cum = np.cumsum(ps.weights)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, positions, side="right")
    return ps.take(np.minimum(idx, n - 1))


def regularize(ps: ParticleSet, bandwidth, seed=None) -> ParticleSet:
    """Kernel jitter on position and yaw after a resampling step.

    Each particle moves by a Gaussian draw with covariance
    ``bandwidth**2`` times the weighted sample covariance of
    ``(x, y, z, yaw)``. The jitter shrinks with the cloud, so a collapsed
    set (or ``bandwidth == 0``) is returned unchanged.
    """
    if bandwidth < 0:
        raise ValueError("bandwidth must be non-negative")
    if bandwidth == 0 or len(ps) < 2:
        return ps
    w = ps.weights
    yaw_ref, _ = circular_mean_deg(ps.yaw, w)
    x = np.column_stack([ps.position, wrap_deg(ps.yaw - yaw_ref)])
    if not np.ptp(x, axis=0).any():
        return ps
    dev = x - w @ x
    cov = (dev * w[:, None]).T @ dev
    evals, evecs = np.linalg.eigh(cov)
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    rng = np.random.default_rng(seed)
    jitter = bandwidth * rng.standard_normal((len(ps), 4)) @ root.T
    return replace(ps, position=ps.position + jitter[:, :3],
                   yaw=wrap_deg(ps.yaw + jitter[:, 3]))


@dataclass(frozen=True)
class Spread:
    position_cov: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    yaw_circular_variance: float = 0.0


def circular_mean_deg(angles, weights):
    a = np.radians(angles)
    s = np.sum(weights * np.sin(a))
    c = np.sum(weights * np.cos(a))
    return wrap_deg(np.degrees(np.arctan2(s, c))), float(1.0 - np.hypot(s, c))


def estimate(ps: ParticleSet):
    """Weighted mean state plus spread (position covariance, yaw circular variance)."""
    w = ps.weights
    mu = w @ ps.position
    dev = ps.position - mu
    cov = (dev * w[:, None]).T @ dev
    yaw, circ_var = circular_mean_deg(ps.yaw, w)
    state = StateVector(mu, yaw, float(w @ ps.theta), float(w @ ps.phi),
                        max(float(w @ ps.speed), 0.0))
    return state, Spread(cov, max(circ_var, 0.0))
