"""
Simulated spinning range sensor.

Returns become classifier training data: the hit point and a point just
behind it are labelled obstacle (+1); samples along the free part of every
ray are labelled free (-1).
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from psp.planner.world import World, ray_distances

logger = logging.getLogger(__name__)

OBSTACLE = 1.0
FREE = -1.0


@dataclass(frozen=True)
class Scan:
    pose: np.ndarray
    angles: np.ndarray
    ranges: np.ndarray
    hits: np.ndarray
    points: np.ndarray
    labels: np.ndarray

    @property
    def n_rays(self) -> int:
        return len(self.angles)

    @property
    def n_hits(self) -> int:
        return int(np.count_nonzero(self.hits))


def sense(world: World, pose, radius: float, n_rays: int = 360,
          rng: Optional[np.random.Generator] = None,
          range_noise: float = 0.0, free_spacing: float = 5.0,
          hit_depth: float = 2.0) -> Scan:
    """
    Ray-cast against the true world (known and unknown obstacles).

    Args:
        world: ground-truth course
        pose: sensor position (x, y)
        radius: maximum range; 0 yields no labelled points
        n_rays: bearings at equal spacing
        rng: noise stream (required when range_noise > 0)
        range_noise: standard deviation of additive Gaussian range noise
        free_spacing: distance between free samples along a ray
        hit_depth: how far behind a hit the second obstacle label sits

    Returns:
        Scan with one range per ray and the labelled points
    """
    pose = np.asarray(pose, dtype=float)
    angles = np.arange(n_rays) * (2.0 * np.pi / n_rays)
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    ranges = ray_distances(pose, directions, radius, world.obstacles)
    hits = ranges < radius
    if range_noise > 0.0 and np.any(hits):
        if rng is None:
            raise ValueError("range noise needs a random generator")
        ranges = np.where(hits, np.clip(ranges + rng.normal(0.0, range_noise, n_rays), 0.0, radius), ranges)

    points, labels = [], []
    if radius > 0.0:
        for direction, r, hit in zip(directions, ranges, hits):
            if hit:
                # stop short of the surface so free samples never sit on it
                free_d = np.arange(free_spacing, r - 0.5 * free_spacing, free_spacing)
                points.append(pose + np.outer([r, r + hit_depth], direction))
                labels.append(np.full(2, OBSTACLE))
            else:
                free_d = np.append(np.arange(free_spacing, r, free_spacing), r)
            if len(free_d):
                points.append(pose + np.outer(free_d, direction))
                labels.append(np.full(len(free_d), FREE))

    if points:
        all_points = np.vstack(points)
        all_labels = np.concatenate(labels)
    else:
        all_points = np.empty((0, 2))
        all_labels = np.empty(0)
    logger.debug(
        f"Scan at ({pose[0]:.1f}, {pose[1]:.1f}): {int(hits.sum())}/{n_rays} hits, "
        f"{len(all_labels)} labelled points"
    )
    return Scan(pose, angles, ranges, hits, all_points, all_labels)
