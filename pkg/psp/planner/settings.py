"""
Planner settings - one dataclass, loadable from a JSON file whose keys
override the defaults.
"""

import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from psp.config import config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    # RRT*
    n_nodes: int = 300
    steer: float = 25.0
    horizon: float = 150.0
    goal_radius: float = 15.0
    goal_bias: float = 0.1
    rewire_gamma: float = 200.0
    max_attempts: int = 20
    min_progress: float = 1.0

    # Edge safety
    epsilon: float = 0.5
    waypoint_spacing: float = 1.0

    # Sensor
    sensor_radius: float = 90.0
    n_rays: int = 360
    range_noise: float = 0.3
    free_spacing: float = 5.0
    hit_depth: float = 2.0

    # Obstacle belief
    cell_size: float = 20.0
    obs_noise: float = 0.5
    prior_weight_std: float = 0.2
    prior_bias_std: float = 0.2

    # Mission
    traverse_fraction: float = 0.5
    max_traverse: float = 30.0
    max_cycles: int = 250
    snapshots: bool = False

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be at least 2")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.steer <= 0 or self.waypoint_spacing <= 0 or self.cell_size <= 0:
            raise ValueError("steer, waypoint_spacing and cell_size must be positive")
        if self.sensor_radius < 0:
            raise ValueError("sensor_radius must be non-negative")
        if not 0.0 < self.traverse_fraction <= 1.0:
            raise ValueError("traverse_fraction must lie in (0, 1]")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'PlannerConfig':
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown planner setting(s): {', '.join(unknown)}")
        return cls(**dict(data))


def load_planner_config(path: Optional[Union[str, Path]] = None,
                        epsilon: Optional[float] = None) -> PlannerConfig:
    """
    Defaults, then the JSON file (if any), then an explicit epsilon.

    Without a file and without a flag, epsilon comes from PSP_EPSILON.
    """
    data: Dict[str, Any] = {'epsilon': config.PSP_EPSILON}
    if path is not None:
        with open(path, 'r', encoding='utf-8') as f:
            data.update(json.load(f))
        logger.info(f"Loaded planner settings from {path}")
    if epsilon is not None:
        data['epsilon'] = epsilon
    return PlannerConfig.from_dict(data)
