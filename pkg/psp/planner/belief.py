"""
Online obstacle belief: one Bayesian linear classifier per grid cell.

Each cell regresses the ±1 obstacle label on local features
(dx / cell, dy / cell, 1), measured from the cell centre, with a Gaussian
prior on the weights and a fixed observation noise. The posterior is kept in
information form (precision matrix and precision-weighted mean) so updates
are sums and batch order does not matter.

A positive score w . phi means obstacle.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import ndtr

from psp.planner.world import World

logger = logging.getLogger(__name__)

N_FEATURES = 3


@dataclass(frozen=True)
class ObstacleBelief:
    origin: Tuple[float, float]
    cell_size: float
    precision: np.ndarray  # (ny, nx, 3, 3)
    info: np.ndarray       # (ny, nx, 3)
    counts: np.ndarray     # (ny, nx) observations absorbed per cell

    @classmethod
    def prior(cls, world: World, cell_size: float = 20.0,
              weight_std: float = 0.2, bias_std: float = 0.2) -> 'ObstacleBelief':
        """Every cell confidently clear: weight mean (0, 0, -1)"""
        xmin, ymin, xmax, ymax = world.bounds
        nx = int(np.ceil((xmax - xmin) / cell_size))
        ny = int(np.ceil((ymax - ymin) / cell_size))
        prec0 = np.diag(1.0 / np.array([weight_std, weight_std, bias_std]) ** 2)
        mean0 = np.array([0.0, 0.0, -1.0])
        precision = np.broadcast_to(prec0, (ny, nx, 3, 3)).copy()
        info = np.broadcast_to(prec0 @ mean0, (ny, nx, 3)).copy()
        return cls((xmin, ymin), float(cell_size), precision, info, np.zeros((ny, nx), dtype=int))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.counts.shape

    def cell_of(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """(row, column) of each point, clipped to the grid"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ny, nx = self.shape
        col = np.floor((points[:, 0] - self.origin[0]) / self.cell_size).astype(int)
        row = np.floor((points[:, 1] - self.origin[1]) / self.cell_size).astype(int)
        return np.clip(row, 0, ny - 1), np.clip(col, 0, nx - 1)

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ny, nx = self.shape
        rel = (points - np.asarray(self.origin)) / self.cell_size
        return (rel[:, 0] >= 0) & (rel[:, 0] < nx) & (rel[:, 1] >= 0) & (rel[:, 1] < ny)

    def cell_center(self, row, col) -> np.ndarray:
        return np.stack([
            self.origin[0] + (np.asarray(col) + 0.5) * self.cell_size,
            self.origin[1] + (np.asarray(row) + 0.5) * self.cell_size,
        ], axis=-1)

    def features(self, points, row, col) -> np.ndarray:
        """(n, 3) local features of points relative to the given cells"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        local = (points - self.cell_center(row, col)) / self.cell_size
        return np.hstack([local, np.ones((len(points), 1))])

    def posterior(self, row: int, col: int) -> Tuple[np.ndarray, np.ndarray]:
        """Mean and (symmetrised) covariance of one cell's weights"""
        cov = np.linalg.inv(self.precision[row, col])
        cov = 0.5 * (cov + cov.T)
        return cov @ self.info[row, col], cov

    def obstacle_probability(self, points) -> np.ndarray:
        """Posterior probability that w . phi > 0 at each point"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        row, col = self.cell_of(points)
        phi = self.features(points, row, col)
        cov = np.linalg.inv(self.precision[row, col])
        mean = np.einsum('pij,pj->pi', cov, self.info[row, col])
        score = np.einsum('pi,pi->p', mean, phi)
        var = np.einsum('pi,pij,pj->p', phi, cov, phi)
        return ndtr(score / np.sqrt(var))


def update_belief(belief: ObstacleBelief, points, labels, noise: float = 0.5) -> ObstacleBelief:
    """
    Conjugate update with labelled points (label +1 obstacle, -1 free).

    Points outside the grid are ignored; with none left the same belief is
    returned.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    labels = np.asarray(labels, dtype=float).reshape(-1)
    if len(points) != len(labels):
        raise ValueError(f"{len(points)} points but {len(labels)} labels")
    inside = belief.contains(points)
    points, labels = points[inside], labels[inside]
    if len(points) == 0:
        return belief

    row, col = belief.cell_of(points)
    phi = belief.features(points, row, col)
    beta = 1.0 / noise ** 2
    precision = belief.precision.copy()
    info = belief.info.copy()
    counts = belief.counts.copy()
    np.add.at(precision, (row, col), beta * np.einsum('pi,pj->pij', phi, phi))
    np.add.at(info, (row, col), beta * labels[:, None] * phi)
    np.add.at(counts, (row, col), 1)
    logger.debug(f"Belief update: {len(points)} points into {len(set(zip(row, col)))} cells")
    return ObstacleBelief(belief.origin, belief.cell_size, precision, info, counts)
