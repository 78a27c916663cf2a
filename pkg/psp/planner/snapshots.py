"""
Top-down SVG frames of a planning cycle: course, obstacle belief, tree
(pruned edges in red), chosen path and flown trail.
"""

import io
import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib import patches  # noqa: E402
import numpy as np  # noqa: E402

from psp.artifacts import write_text  # noqa: E402
from psp.planner.belief import ObstacleBelief  # noqa: E402
from psp.planner.rrt import PlanResult  # noqa: E402
from psp.planner.sensor import Scan  # noqa: E402
from psp.planner.world import World  # noqa: E402

logger = logging.getLogger(__name__)


def render_snapshot(world: World, belief: ObstacleBelief, plan: Optional[PlanResult] = None,
                    trail: Sequence[Sequence[float]] = (), scan: Optional[Scan] = None) -> str:
    """Return the frame as SVG text"""
    fig, ax = plt.subplots(figsize=(8, 5))
    try:
        xmin, ymin, xmax, ymax = world.bounds
        ny, nx = belief.shape
        rows, cols = np.meshgrid(np.arange(ny), np.arange(nx), indexing='ij')
        centres = belief.cell_center(rows.ravel(), cols.ravel())
        prob = belief.obstacle_probability(centres).reshape(ny, nx)
        ax.imshow(prob, origin='lower', cmap='Greys', vmin=0.0, vmax=1.0, alpha=0.5,
                  extent=(belief.origin[0], belief.origin[0] + nx * belief.cell_size,
                          belief.origin[1], belief.origin[1] + ny * belief.cell_size))

        for poly in world.known_obstacles:
            ax.add_patch(patches.Polygon(poly, closed=True, facecolor='lightgrey', edgecolor='black'))
        for poly in world.unknown_obstacles:
            ax.add_patch(patches.Polygon(poly, closed=True, fill=False, edgecolor='red', linestyle='--'))
        for gate in world.gates:
            a, b = gate.segment
            ax.plot([a[0], b[0]], [a[1], b[1]], color='tab:blue', linewidth=2)
            ax.annotate(gate.name, gate.position, fontsize=7, ha='center', va='bottom')

        if scan is not None and scan.n_hits:
            hit_points = scan.pose + scan.ranges[scan.hits, None] * np.stack(
                [np.cos(scan.angles[scan.hits]), np.sin(scan.angles[scan.hits])], axis=1)
            ax.plot(hit_points[:, 0], hit_points[:, 1], '.', color='orange', markersize=2)

        if plan is not None:
            for parent, child in plan.tree.edges():
                a, b = plan.tree.positions[parent], plan.tree.positions[child]
                safe = plan.verdicts[child].safe if child in plan.verdicts else True
                ax.plot([a[0], b[0]], [a[1], b[1]], color='tab:green' if safe else 'red',
                        linewidth=0.4, alpha=0.6)
            path = plan.waypoints
            if len(path):
                ax.plot(path[:, 0], path[:, 1], color='tab:purple', linewidth=2)

        if len(trail):
            trail = np.asarray(trail)
            ax.plot(trail[:, 0], trail[:, 1], color='black', linewidth=1.2)

        ax.set_xlim(xmin, xmax)
        ax.set_ylim(ymin, ymax)
        ax.set_aspect('equal')
        buffer = io.StringIO()
        fig.savefig(buffer, format='svg', bbox_inches='tight')
        return buffer.getvalue()
    finally:
        plt.close(fig)


def save_snapshot(path, world: World, belief: ObstacleBelief, plan: Optional[PlanResult] = None,
                  trail: Sequence[Sequence[float]] = (), scan: Optional[Scan] = None) -> Path:
    path = write_text(path, render_snapshot(world, belief, plan, trail, scan))
    logger.debug(f"Snapshot written: {path}")
    return path
