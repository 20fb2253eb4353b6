"""Monte-Carlo localization against the static map.

Likelihood-field measurement model over decimated beams, systematic
resampling gated on effective sample size, weighted-mean pose estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import Pose2D
from .grid import OccupancyGrid
from .sim import LidarScan


@dataclass(frozen=True)
class MclConfig:
    n_particles: int = 500
    sigma_xy: float = 0.01       # per-update odometry noise, meters
    sigma_theta: float = 0.01    # per-update odometry noise, radians
    sigma_hit: float = 0.1       # likelihood-field width, meters
    beam_decimation: int = 8
    resample_fraction: float = 0.5  # resample when n_eff < fraction * N
    oob_distance: float = 1.0    # scored distance for endpoints off the map
    distance_cap: float = 0.5    # bound on scored distances (unmapped obstacles)


class DistanceField:
    """Meters-to-nearest-obstacle lookup for the likelihood field."""

    def __init__(self, grid: OccupancyGrid):
        if abs(grid.origin.theta) > 1e-12:
            raise ValueError("distance field requires an axis-aligned grid")
        dsq = kernels.edt_sq(grid.occupied_mask())
        self.field = np.sqrt(dsq.astype(np.float64)) * grid.resolution
        self.resolution = grid.resolution
        self.origin_x = grid.origin.x
        self.origin_y = grid.origin.y

    def distance_at(self, x: float, y: float, default: float = math.inf) -> float:
        ix = math.floor((x - self.origin_x) / self.resolution)
        iy = math.floor((y - self.origin_y) / self.resolution)
        h, w = self.field.shape
        if 0 <= ix < w and 0 <= iy < h:
            return float(self.field[iy, ix])
        return default


class ParticleFilter:
    """Fixed-size particle set over planar poses.

    All sampling goes through the generator handed in at construction, so
    a seeded generator makes the filter fully reproducible.
    """

    def __init__(self, config: MclConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        n = config.n_particles
        self.poses = np.zeros((n, 3))
        self.weights = np.full(n, 1.0 / n)

    @property
    def n(self) -> int:
        return len(self.poses)

    def initialize_uniform(self, center: Pose2D, half_xy: float, half_theta: float) -> None:
        n = self.n
        self.poses[:, 0] = center.x + self.rng.uniform(-half_xy, half_xy, n)
        self.poses[:, 1] = center.y + self.rng.uniform(-half_xy, half_xy, n)
        self.poses[:, 2] = center.theta + self.rng.uniform(-half_theta, half_theta, n)
        self.weights[:] = 1.0 / n

    def initialize_at(self, pose: Pose2D) -> None:
        self.poses[:, 0] = pose.x
        self.poses[:, 1] = pose.y
        self.poses[:, 2] = pose.theta
        self.weights[:] = 1.0 / self.n

    def motion_update(self, delta: Pose2D, sigma_xy: float | None = None,
                      sigma_theta: float | None = None) -> None:
        """Compose every particle with the odometry delta plus sampled noise."""
        sx = self.config.sigma_xy if sigma_xy is None else sigma_xy
        st = self.config.sigma_theta if sigma_theta is None else sigma_theta
        n = self.n
        dx = delta.x + self.rng.normal(0.0, sx, n) if sx > 0 else np.full(n, delta.x)
        dy = delta.y + self.rng.normal(0.0, sx, n) if sx > 0 else np.full(n, delta.y)
        dth = delta.theta + self.rng.normal(0.0, st, n) if st > 0 else np.full(n, delta.theta)
        c = np.cos(self.poses[:, 2])
        s = np.sin(self.poses[:, 2])
        self.poses[:, 0] += c * dx - s * dy
        self.poses[:, 1] += s * dx + c * dy
        theta = self.poses[:, 2] + dth
        off = (theta > math.pi) | (theta <= -math.pi)
        if off.any():
            theta[off] = _wrap_array(theta[off])
        self.poses[:, 2] = theta

    def measurement_update(self, scan: LidarScan, field: DistanceField) -> bool:
        """Likelihood-field reweighting. Returns True when the filter
        diverged (all weights vanished) and was reset to uniform."""
        sel = np.arange(0, scan.beam_count, self.config.beam_decimation)
        ranges = scan.ranges[sel]
        valid = ranges < scan.max_range
        if not valid.any():
            return False
        rel_angles = scan.beam_angles()[sel][valid]
        ranges = ranges[valid]

        log_fac = kernels.likelihood_logsum(
            self.poses[:, 0], self.poses[:, 1], self.poses[:, 2],
            rel_angles, ranges, field.field, field.origin_x, field.origin_y,
            field.resolution, self.config.sigma_hit, self.config.oob_distance,
            self.config.distance_cap,
        )
        with np.errstate(divide="ignore"):
            log_w = np.where(self.weights > 0.0, np.log(self.weights), -np.inf) + log_fac
        peak = float(np.max(log_w))
        if not math.isfinite(peak):
            self.weights[:] = 1.0 / self.n
            return True
        w = np.exp(log_w - peak)
        total = float(w.sum())
        if total <= 0.0 or not math.isfinite(total):
            self.weights[:] = 1.0 / self.n
            return True
        self.weights = w / total
        return False

    def n_eff(self) -> float:
        return 1.0 / float(np.sum(self.weights * self.weights))

    def resample(self) -> bool:
        """Low-variance systematic resampling when n_eff drops below the
        configured fraction of N. Keeps N constant; resets weights uniform."""
        if self.n_eff() >= self.config.resample_fraction * self.n:
            return False
        n = self.n
        u = self.rng.uniform(0.0, 1.0)
        positions = (np.arange(n) + u) / n
        cumulative = np.cumsum(self.weights)
        cumulative[-1] = 1.0  # guard rounding
        idx = np.searchsorted(cumulative, positions, side="left")
        self.poses = self.poses[idx].copy()
        self.weights = np.full(n, 1.0 / n)
        return True

    def estimate(self) -> Pose2D:
        w = self.weights
        x = float(np.dot(w, self.poses[:, 0]))
        y = float(np.dot(w, self.poses[:, 1]))
        theta = math.atan2(
            float(np.dot(w, np.sin(self.poses[:, 2]))),
            float(np.dot(w, np.cos(self.poses[:, 2]))),
        )
        return Pose2D(x, y, theta)


def _wrap_array(theta: np.ndarray) -> np.ndarray:
    wrapped = np.remainder(theta + math.pi, 2.0 * math.pi) - math.pi
    # remainder maps to [-pi, pi); shift the open end to match (-pi, pi]
    wrapped[wrapped <= -math.pi] += 2.0 * math.pi
    return wrapped
