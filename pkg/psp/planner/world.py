"""
Course geometry: bounds, gates, convex obstacles, and the segment/ray tests
the sensor, planner and mission audit share.

World file format (JSON):
    {"bounds": [xmin, ymin, xmax, ymax],
     "gates": [{"name": "gate-1", "position": [x, y], "width": 40, "heading": 0}, ...],
     "known_obstacles": [[[x, y], ...], ...],
     "unknown_obstacles": [[[x, y], ...], ...],
     "altitude_floor": 22.86}

Polygons are convex and listed counter-clockwise.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from psp.artifacts import write_json

logger = logging.getLogger(__name__)

# minimum flight altitude (m)
DEFAULT_ALTITUDE_FLOOR = 22.86


class WorldError(ValueError):
    """Malformed course description"""
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    position: Tuple[float, float]
    width: float = 40.0
    heading: float = 0.0

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)

    @property
    def segment(self) -> Tuple[np.ndarray, np.ndarray]:
        """Crossing segment, perpendicular to the heading"""
        normal = np.array([-np.sin(self.heading), np.cos(self.heading)])
        half = 0.5 * self.width * normal
        return self.center - half, self.center + half


def _as_polygon(points) -> np.ndarray:
    poly = np.asarray(points, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise WorldError(f"obstacle needs at least 3 (x, y) vertices, got shape {poly.shape}")
    # signed area; clockwise input is reversed
    x, y = poly[:, 0], poly[:, 1]
    area = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    if area == 0.0:
        raise WorldError("obstacle polygon is degenerate")
    return poly if area > 0 else poly[::-1].copy()


def box(xmin: float, ymin: float, xmax: float, ymax: float) -> np.ndarray:
    return np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]], dtype=float)


def square(cx: float, cy: float, side: float) -> np.ndarray:
    h = side / 2.0
    return box(cx - h, cy - h, cx + h, cy + h)


def _edges(poly: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Edge start points and outward normals of a counter-clockwise polygon"""
    d = np.roll(poly, -1, axis=0) - poly
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1)
    return poly, normals


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Boolean mask of points inside or on a convex polygon"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    starts, normals = _edges(poly)
    # (n_points, n_edges) signed offsets; inside when none is positive
    offsets = np.einsum('ek,pek->pe', normals, points[:, None, :] - starts[None, :, :])
    return np.all(offsets <= 1e-9, axis=1)


def clip_segment(a: np.ndarray, b: np.ndarray, poly: np.ndarray) -> Tuple[float, float]:
    """
    Parameter interval [t_in, t_out] of a + t(b - a) inside a convex polygon.

    Returns:
        (t_in, t_out) with t_in > t_out when the segment misses the polygon
    """
    d = b - a
    t_in, t_out = 0.0, 1.0
    starts, normals = _edges(poly)
    for p0, n in zip(starts, normals):
        num = float(np.dot(n, a - p0))
        den = float(np.dot(n, d))
        if den == 0.0:
            if num > 0.0:
                return 1.0, 0.0
            continue
        t = -num / den
        if den < 0.0:
            t_in = max(t_in, t)
        else:
            t_out = min(t_out, t)
        if t_in > t_out:
            return t_in, t_out
    return t_in, t_out


def segment_hits_polygon(a, b, poly: np.ndarray) -> bool:
    t_in, t_out = clip_segment(np.asarray(a, dtype=float), np.asarray(b, dtype=float), poly)
    return t_in <= t_out


def ray_distances(origin: np.ndarray, directions: np.ndarray, max_range: float,
                  polygons: Sequence[np.ndarray]) -> np.ndarray:
    """
    Distance along each unit direction to the first polygon boundary.

    Returns:
        (n_rays,) distances, max_range where nothing is hit within range
    """
    origin = np.asarray(origin, dtype=float)
    result = np.full(len(directions), float(max_range))
    if max_range <= 0.0:
        return np.zeros(len(directions))
    for poly in polygons:
        starts, normals = _edges(poly)
        num = np.einsum('ek,ek->e', normals, origin[None, :] - starts)
        den = directions @ normals.T  # (n_rays, n_edges)
        t_in = np.zeros(len(directions))
        t_out = np.full(len(directions), float(max_range))
        with np.errstate(divide='ignore', invalid='ignore'):
            t = -num[None, :] / den
        entering = den < 0.0
        leaving = den > 0.0
        parallel_out = (den == 0.0) & (num[None, :] > 0.0)
        t_in = np.maximum(t_in, np.max(np.where(entering, t, -np.inf), axis=1))
        t_out = np.minimum(t_out, np.min(np.where(leaving, t, np.inf), axis=1))
        hit = (t_in <= t_out) & ~np.any(parallel_out, axis=1)
        result = np.where(hit, np.minimum(result, t_in), result)
    return result


@dataclass
class World:
    """2D course with gates and convex obstacles"""
    bounds: Tuple[float, float, float, float]
    gates: List[Gate]
    known_obstacles: List[np.ndarray] = field(default_factory=list)
    unknown_obstacles: List[np.ndarray] = field(default_factory=list)
    altitude_floor: float = DEFAULT_ALTITUDE_FLOOR

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise WorldError(f"invalid bounds {self.bounds}")
        if len(self.gates) < 2:
            raise WorldError("a course needs at least two gates")
        self.known_obstacles = [_as_polygon(p) for p in self.known_obstacles]
        self.unknown_obstacles = [_as_polygon(p) for p in self.unknown_obstacles]
        for poly in self.obstacles:
            if not np.all(self.in_bounds(poly)):
                raise WorldError(f"obstacle {poly.tolist()} leaves the course bounds")
        for gate in self.gates:
            if not self.in_bounds(gate.center)[0]:
                raise WorldError(f"gate {gate.name} lies outside the course bounds")
            if any(points_in_polygon(gate.center, p)[0] for p in self.obstacles):
                raise WorldError(f"gate {gate.name} lies inside an obstacle")

    @property
    def obstacles(self) -> List[np.ndarray]:
        return list(self.known_obstacles) + list(self.unknown_obstacles)

    def known_view(self) -> 'World':
        """What the planner is told before flying"""
        return replace(self, unknown_obstacles=[])

    def in_bounds(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xmin, ymin, xmax, ymax = self.bounds
        return ((points[:, 0] >= xmin) & (points[:, 0] <= xmax)
                & (points[:, 1] >= ymin) & (points[:, 1] <= ymax))

    def point_free(self, point) -> bool:
        if not self.in_bounds(point)[0]:
            return False
        return not any(points_in_polygon(point, p)[0] for p in self.obstacles)

    def segment_free(self, a, b) -> bool:
        """Segment stays in bounds and misses every obstacle this view knows about"""
        if not np.all(self.in_bounds(np.vstack([a, b]))):
            return False
        return not any(segment_hits_polygon(a, b, p) for p in self.obstacles)

    def collisions(self, a, b) -> int:
        """Number of obstacles (known and unknown) the segment touches"""
        return sum(1 for p in self.obstacles if segment_hits_polygon(a, b, p))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'bounds': list(self.bounds),
            'gates': [
                {'name': g.name, 'position': list(g.position), 'width': g.width, 'heading': g.heading}
                for g in self.gates
            ],
            'known_obstacles': [p.tolist() for p in self.known_obstacles],
            'unknown_obstacles': [p.tolist() for p in self.unknown_obstacles],
            'altitude_floor': self.altitude_floor,
        }


def world_from_dict(data: Dict[str, Any]) -> World:
    try:
        gates = [
            Gate(g['name'], tuple(float(v) for v in g['position']),
                 float(g.get('width', 40.0)), float(g.get('heading', 0.0)))
            for g in data['gates']
        ]
        return World(
            bounds=tuple(float(v) for v in data['bounds']),
            gates=gates,
            known_obstacles=data.get('known_obstacles', []),
            unknown_obstacles=data.get('unknown_obstacles', []),
            altitude_floor=float(data.get('altitude_floor', DEFAULT_ALTITUDE_FLOOR)),
        )
    except (KeyError, TypeError) as e:
        raise WorldError(f"malformed world description: {e}") from e


def load_world(path: Union[str, Path]) -> World:
    """Raises OSError when unreadable, WorldError when malformed"""
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise WorldError(f"{path}: invalid JSON: {e}") from e
    world = world_from_dict(data)
    logger.info(
        f"Loaded world {path}: {len(world.gates)} gates, {len(world.known_obstacles)} known / "
        f"{len(world.unknown_obstacles)} unknown obstacles"
    )
    return world


def save_world(world: World, path: Union[str, Path]) -> Path:
    return write_json(path, world.to_dict())


def default_course(unknown: bool = True) -> World:
    """
    Six-gate ring course around a central island.

    Known obstacles are the island and two pylons; the two unknown 30 m
    blocks sit on the straight racing lines of the bottom and top legs.
    """
    gates = [
        Gate('gate-1', (100.0, 250.0), heading=np.pi / 2),
        Gate('gate-2', (250.0, 75.0)),
        Gate('gate-3', (550.0, 75.0)),
        Gate('gate-4', (700.0, 250.0), heading=np.pi / 2),
        Gate('gate-5', (550.0, 425.0), heading=np.pi),
        Gate('gate-6', (250.0, 425.0), heading=np.pi),
    ]
    known = [
        box(200.0, 150.0, 600.0, 350.0),
        square(150.0, 440.0, 16.0),
        square(650.0, 40.0, 16.0),
    ]
    hidden = [square(400.0, 75.0, 30.0), square(400.0, 425.0, 30.0)] if unknown else []
    return World((0.0, 0.0, 800.0, 500.0), gates, known, hidden)
