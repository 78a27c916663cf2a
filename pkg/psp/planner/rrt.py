"""
Receding-horizon RRT* with probabilistic edge pruning.

The tree is grown against the known map only. Every tree edge is then
checked with the edge clearance program against the current obstacle
belief; unsafe edges are dropped and Dijkstra on what is left picks the
path to the next gate.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from psp.bindings import InputBinding
from psp.compiler import compile_model
from psp.config import runtime_config
from psp.corpus import load_program
from psp.frontend.syntax import ProgramAst
from psp.frontend.validator import ValidatedProgram, validate
from psp.inference.engine import query_safety
from psp.planner.belief import ObstacleBelief
from psp.planner.settings import PlannerConfig
from psp.planner.world import World
from psp.unroller import constant_fold, unroll

logger = logging.getLogger(__name__)

EDGE_PROGRAM = 'edge_clearance'

STATUS_GOAL = 'goal'
STATUS_PROGRESS = 'progress'
STATUS_HOLD = 'hold'


@lru_cache(maxsize=1)
def edge_program() -> ProgramAst:
    return load_program(EDGE_PROGRAM)


@lru_cache(maxsize=4)
def validated_edge_program(n_points: int) -> ValidatedProgram:
    """Edge program validated once per waypoint count"""
    return validate(edge_program(), InputBinding({
        'x': np.zeros((n_points, 3)),
        'Mu': np.zeros(3),
        'Sigma': np.eye(3),
    }))


class PlanTree:
    """Single-parent tree of 2D states rooted at index 0"""

    def __init__(self, root):
        self.positions: List[np.ndarray] = [np.asarray(root, dtype=float)]
        self.parent: List[Optional[int]] = [None]
        self.cost: List[float] = [0.0]
        self.children: List[List[int]] = [[]]

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def root(self) -> np.ndarray:
        return self.positions[0]

    def as_array(self) -> np.ndarray:
        return np.vstack(self.positions)

    def add(self, position, parent: int, cost: float) -> int:
        idx = len(self.positions)
        self.positions.append(np.asarray(position, dtype=float))
        self.parent.append(parent)
        self.cost.append(cost)
        self.children.append([])
        self.children[parent].append(idx)
        return idx

    def rewire(self, node: int, new_parent: int, new_cost: float):
        """Re-parent node and shift the cost of its whole subtree"""
        old_parent = self.parent[node]
        self.children[old_parent].remove(node)
        self.children[new_parent].append(node)
        self.parent[node] = new_parent
        delta = new_cost - self.cost[node]
        stack = [node]
        while stack:
            current = stack.pop()
            self.cost[current] += delta
            stack.extend(self.children[current])

    def edges(self) -> List[Tuple[int, int]]:
        return [(p, c) for c, p in enumerate(self.parent) if p is not None]

    def edge_length(self, parent: int, child: int) -> float:
        return float(np.linalg.norm(self.positions[child] - self.positions[parent]))

    def check(self):
        """Raise AssertionError unless every non-root node has one parent and costs add up"""
        for child, parent in enumerate(self.parent):
            if child == 0:
                assert parent is None
                continue
            assert parent is not None and child in self.children[parent]
            expected = self.cost[parent] + self.edge_length(parent, child)
            assert math.isclose(self.cost[child], expected, rel_tol=1e-9, abs_tol=1e-6)


@dataclass(frozen=True)
class EdgeVerdict:
    parent: int
    child: int
    p: float
    safe: bool
    certified: bool
    cells: int

    def to_dict(self) -> Dict:
        return {'parent': self.parent, 'child': self.child, 'p': self.p,
                'safe': self.safe, 'certified': self.certified, 'cells': self.cells}


@dataclass
class PlanResult:
    tree: PlanTree
    status: str
    path: List[int] = field(default_factory=list)
    verdicts: Dict[int, EdgeVerdict] = field(default_factory=dict)
    target: Optional[int] = None

    @property
    def waypoints(self) -> np.ndarray:
        if not self.path:
            return np.empty((0, 2))
        return np.vstack([self.tree.positions[i] for i in self.path])

    @property
    def pruned(self) -> int:
        return sum(1 for v in self.verdicts.values() if not v.safe)

    @property
    def length(self) -> float:
        pts = self.waypoints
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()) if len(pts) > 1 else 0.0


def steer(origin: np.ndarray, target: np.ndarray, step: float) -> np.ndarray:
    d = target - origin
    dist = float(np.linalg.norm(d))
    if dist <= step:
        return target.copy()
    return origin + d * (step / dist)


def near_radius(n: int, cfg: PlannerConfig) -> float:
    """gamma * sqrt(log n / n), capped at the steering distance (2D)"""
    n = max(n, 2)
    return min(cfg.steer, cfg.rewire_gamma * math.sqrt(math.log(n) / n))


def _sampling_window(world: World, pose: np.ndarray, goal: np.ndarray, cfg: PlannerConfig):
    """Square of side 2 * horizon, shifted from the pose toward the goal, clipped to the course"""
    xmin, ymin, xmax, ymax = world.bounds
    offset = goal - pose
    dist = float(np.linalg.norm(offset))
    centre = pose if dist == 0.0 else pose + offset * min(1.0, 0.5 * cfg.horizon / dist)
    lo = np.maximum(centre - cfg.horizon, [xmin, ymin])
    hi = np.minimum(centre + cfg.horizon, [xmax, ymax])
    return lo, hi


def build_tree(world: World, pose, goal, cfg: PlannerConfig, rng: np.random.Generator) -> PlanTree:
    """
    RRT* against the known map: sample, nearest, steer, choose the cheapest
    collision-free parent among near nodes, rewire near nodes through the
    new one.
    """
    pose = np.asarray(pose, dtype=float)
    goal = np.asarray(goal, dtype=float)
    tree = PlanTree(pose)
    lo, hi = _sampling_window(world, pose, goal, cfg)
    attempts = 0
    max_attempts = cfg.n_nodes * cfg.max_attempts

    while len(tree) < cfg.n_nodes and attempts < max_attempts:
        attempts += 1
        sample = goal if rng.random() < cfg.goal_bias else rng.uniform(lo, hi)
        points = tree.as_array()
        dists = np.linalg.norm(points - sample, axis=1)
        nearest = int(np.argmin(dists))
        new = steer(points[nearest], sample, cfg.steer)
        if np.linalg.norm(new - points[nearest]) < 1e-6 or not world.point_free(new):
            continue

        radius = near_radius(len(tree) + 1, cfg)
        to_new = np.linalg.norm(points - new, axis=1)
        near = [int(i) for i in np.flatnonzero(to_new <= radius)]
        if nearest not in near:
            near.append(nearest)

        candidates = sorted(near, key=lambda i: tree.cost[i] + to_new[i])
        parent = next((i for i in candidates if world.segment_free(points[i], new)), None)
        if parent is None:
            continue
        idx = tree.add(new, parent, tree.cost[parent] + float(to_new[parent]))

        for j in near:
            if j == parent:
                continue
            through_new = tree.cost[idx] + float(to_new[j])
            if through_new < tree.cost[j] - 1e-9 and world.segment_free(new, points[j]):
                tree.rewire(j, idx, through_new)

    if len(tree) < cfg.n_nodes:
        logger.debug(f"RRT* stopped at {len(tree)} nodes after {attempts} attempts")
    return tree


def edge_waypoints(a, b, spacing: float) -> np.ndarray:
    """Points every `spacing` metres from a (excluded) to b (included)"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
    t = np.linspace(0.0, 1.0, n + 1)[1:]
    return a + t[:, None] * (b - a)


def check_edge(belief: ObstacleBelief, a, b, cfg: PlannerConfig, seed: int = 0,
               parent: int = -1, child: int = -1) -> EdgeVerdict:
    """
    Probability that every waypoint of the edge is classified free.

    Waypoints are grouped by grid cell; each group is one query of the edge
    clearance program with that cell's posterior (negated, so a positive
    score means free). Cells are independent, so the edge probability is
    the product of the per-cell answers.

    The features are affine in position and a cell's waypoints are
    consecutive points of one segment, so the score along the group is
    linear and every waypoint is free exactly when the group's first and
    last are. Each query therefore carries at most two points.
    """
    waypoints = edge_waypoints(a, b, cfg.waypoint_spacing)
    rows, cols = belief.cell_of(waypoints)
    p = 1.0
    certified = True
    cells = sorted(set(zip(rows.tolist(), cols.tolist())))
    for row, col in cells:
        index = np.flatnonzero((rows == row) & (cols == col))
        ends = np.unique(index[[0, -1]])
        mu, sigma = belief.posterior(row, col)
        binding = InputBinding({
            'x': belief.features(waypoints[ends], rows[ends], cols[ends]),
            'Mu': -mu,
            'Sigma': sigma,
        })
        gm = compile_model(constant_fold(unroll(validated_edge_program(len(ends)), binding)))
        verdict = query_safety(gm, epsilon=cfg.epsilon, seed=seed, verbose=False)
        p *= verdict.p_lower
        certified = certified and verdict.certified
    return EdgeVerdict(parent, child, p, p >= cfg.epsilon, certified, len(cells))


def check_tree(tree: PlanTree, belief: ObstacleBelief, cfg: PlannerConfig,
               seed: int = 0) -> Dict[int, EdgeVerdict]:
    """Verdict for every tree edge, keyed by child index"""
    edges = tree.edges()

    def run(edge):
        parent, child = edge
        return check_edge(belief, tree.positions[parent], tree.positions[child], cfg, seed, parent, child)

    workers = runtime_config.get_threads()
    if workers == 1 or len(edges) < 2:
        verdicts = [run(e) for e in edges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(run, edges))
    return {v.child: v for v in verdicts}


def safe_graph(tree: PlanTree, verdicts: Dict[int, EdgeVerdict]) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_node(0)
    for parent, child in tree.edges():
        if verdicts[child].safe:
            graph.add_edge(parent, child, weight=tree.edge_length(parent, child))
    return graph


def plan_cycle(pose, world: World, belief: ObstacleBelief, cfg: PlannerConfig,
               seed: int, goal) -> PlanResult:
    """
    One planning cycle from the current pose toward a goal point.

    Args:
        pose: current position
        world: the planner's view of the course (known obstacles only)
        belief: current obstacle belief
        cfg: planner settings
        seed: seed for tree sampling
        goal: centre of the next gate

    Returns:
        PlanResult with status 'goal' (path ends in the goal region),
        'progress' (path ends at the safe node closest to the goal) or
        'hold' (no safe node improves on the current pose; empty path)
    """
    pose = np.asarray(pose, dtype=float)
    goal = np.asarray(goal, dtype=float)
    rng = np.random.default_rng(seed)
    tree = build_tree(world, pose, goal, cfg, rng)
    verdicts = check_tree(tree, belief, cfg, seed)

    graph = safe_graph(tree, verdicts)
    distances, paths = nx.single_source_dijkstra(graph, 0, weight='weight')
    reachable = list(distances)
    to_goal = {i: float(np.linalg.norm(tree.positions[i] - goal)) for i in reachable}

    in_region = [i for i in reachable if to_goal[i] <= cfg.goal_radius]
    if in_region:
        target = min(in_region, key=lambda i: distances[i])
        status = STATUS_GOAL
    else:
        target = min(reachable, key=lambda i: to_goal[i])
        if to_goal[0] - to_goal[target] < cfg.min_progress:
            logger.warning(
                f"Plan hold at ({pose[0]:.1f}, {pose[1]:.1f}): no safe node improves on the current pose "
                f"({len(verdicts) - len(graph.edges)} of {len(verdicts)} edges pruned)"
            )
            return PlanResult(tree, STATUS_HOLD, [], verdicts, None)
        status = STATUS_PROGRESS

    result = PlanResult(tree, status, list(paths[target]), verdicts, target)
    logger.debug(
        f"Plan cycle: {len(tree)} nodes, {result.pruned} edges pruned, status {status}, "
        f"path {len(result.path)} nodes / {result.length:.1f} m"
    )
    return result
