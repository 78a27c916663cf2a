"""
Mission loop: sense, update the belief, plan, fly part of the path, repeat
until the last gate is passed or the cycle cap is hit.

Every cycle appends one JSON record to the mission log; executed edges carry
the verdict they had at plan time so the log can be audited afterwards.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from psp.artifacts import append_jsonl, read_jsonl, write_csv
from psp.planner.belief import ObstacleBelief, update_belief
from psp.planner.rrt import STATUS_GOAL, STATUS_HOLD, PlanResult, plan_cycle
from psp.planner.sensor import sense
from psp.planner.settings import PlannerConfig
from psp.planner.world import World

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ('seed', 'completed', 'collisions', 'cycles', 'path_length', 'holds', 'reason')


@dataclass
class MissionResult:
    seed: int
    completed: bool
    collisions: int
    cycles: int
    path_length: float
    holds: int = 0
    reason: str = ''
    trail: List[List[float]] = field(default_factory=list)
    records: List[Dict[str, Any]] = field(default_factory=list)
    log_path: Optional[Path] = None

    @property
    def clean(self) -> bool:
        """Completed with no ground-truth collision"""
        return self.completed and self.collisions == 0

    def summary_row(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'completed': self.completed,
            'collisions': self.collisions,
            'cycles': self.cycles,
            'path_length': round(self.path_length, 3),
            'holds': self.holds,
            'reason': self.reason,
        }


@dataclass
class AuditResult:
    ok: bool
    executed_edges: int
    violations: List[str] = field(default_factory=list)
    collisions: int = 0


def _segment_point_distance(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> float:
    d = b - a
    denom = float(np.dot(d, d))
    t = 0.0 if denom == 0.0 else float(np.clip(np.dot(p - a, d) / denom, 0.0, 1.0))
    return float(np.linalg.norm(a + t * d - p))


def _traverse(plan: PlanResult, cfg: PlannerConfig) -> List[Dict[str, Any]]:
    """
    Edges flown this cycle: a fixed fraction of the path (capped), or the
    whole path when it reaches the goal region within the cap. The last
    edge may be cut short.
    """
    total = plan.length
    if plan.status == STATUS_GOAL and total <= cfg.max_traverse:
        budget = total
    else:
        budget = min(cfg.max_traverse, cfg.traverse_fraction * total)

    flown = []
    for parent, child in zip(plan.path, plan.path[1:]):
        if budget <= 1e-9:
            break
        a = plan.tree.positions[parent]
        b = plan.tree.positions[child]
        length = float(np.linalg.norm(b - a))
        if length > budget:
            b = a + (b - a) * (budget / length)
            length = budget
        verdict = plan.verdicts[child]
        flown.append({
            'from': a.tolist(), 'to': b.tolist(), 'length': length,
            'p': verdict.p, 'safe': verdict.safe, 'certified': verdict.certified,
        })
        budget -= length
    return flown


def run_mission(world: World, cfg: PlannerConfig, seed: int = 0,
                out_dir: Optional[Union[str, Path]] = None,
                snapshot_dir: Optional[Union[str, Path]] = None) -> MissionResult:
    """
    Fly the course from the first gate through the remaining gates in order.

    Args:
        world: ground truth; the planner only sees world.known_view()
        cfg: planner settings
        seed: root seed (sensor noise and per-cycle tree sampling)
        out_dir: when given, the JSON-lines log goes to mission_<seed>.jsonl
        snapshot_dir: when given (and cfg.snapshots), one SVG per cycle

    Returns:
        MissionResult; a mission that hits the cycle cap is reported with
        completed=False rather than raised
    """
    known = world.known_view()
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    cycle_seeds = np.random.SeedSequence(seed, spawn_key=(1,)).generate_state(cfg.max_cycles)
    belief = ObstacleBelief.prior(world, cfg.cell_size, cfg.prior_weight_std, cfg.prior_bias_std)

    log_path = None
    if out_dir is not None:
        log_path = Path(out_dir) / f"mission_{seed}.jsonl"
        if log_path.exists():
            log_path.unlink()

    pose = world.gates[0].center
    gate_idx = 1
    result = MissionResult(seed, False, 0, 0, 0.0, trail=[pose.tolist()], log_path=log_path)

    for cycle in range(cfg.max_cycles):
        started = time.perf_counter()
        gate = world.gates[gate_idx]
        scan = sense(world, pose, cfg.sensor_radius, cfg.n_rays, rng,
                     cfg.range_noise, cfg.free_spacing, cfg.hit_depth)
        belief = update_belief(belief, scan.points, scan.labels, cfg.obs_noise)
        plan = plan_cycle(pose, known, belief, cfg, int(cycle_seeds[cycle]), gate.center)

        flown = [] if plan.status == STATUS_HOLD else _traverse(plan, cfg)
        collisions = 0
        passed = []
        for edge in flown:
            a, b = np.asarray(edge['from']), np.asarray(edge['to'])
            edge['collisions'] = world.collisions(a, b)
            collisions += edge['collisions']
            result.path_length += edge['length']
            result.trail.append(edge['to'])
            while gate_idx < len(world.gates) and \
                    _segment_point_distance(a, b, world.gates[gate_idx].center) <= cfg.goal_radius:
                passed.append(world.gates[gate_idx].name)
                gate_idx += 1
            pose = b
        result.collisions += collisions
        result.cycles = cycle + 1
        if plan.status == STATUS_HOLD:
            result.holds += 1

        record = {
            'cycle': cycle,
            'seed': seed,
            'pose': pose.tolist(),
            'gate': gate.name,
            'status': plan.status,
            'epsilon': cfg.epsilon,
            'nodes': len(plan.tree),
            'edges_checked': len(plan.verdicts),
            'edges_pruned': plan.pruned,
            'path': plan.waypoints.tolist(),
            'executed': flown,
            'gates_passed': passed,
            'hits': scan.n_hits,
            'collisions': collisions,
            'wall_ms': round(1000.0 * (time.perf_counter() - started), 3),
        }
        result.records.append(record)
        if log_path is not None:
            append_jsonl(log_path, record)
        if snapshot_dir is not None and cfg.snapshots:
            from psp.planner.snapshots import save_snapshot
            save_snapshot(Path(snapshot_dir) / f"mission_{seed}_cycle_{cycle:03d}.svg",
                          world, belief, plan, result.trail, scan)

        if gate_idx >= len(world.gates):
            result.completed = True
            break

    if not result.completed:
        result.reason = f"cycle cap {cfg.max_cycles} reached before gate {world.gates[gate_idx].name}"
        logger.warning(f"Mission seed {seed} failed: {result.reason}")
    elif result.collisions:
        result.reason = f"{result.collisions} ground-truth collision(s)"
        logger.warning(f"Mission seed {seed} completed with {result.reason}")
    logger.info(
        f"Mission seed {seed}: {'completed' if result.completed else 'failed'} in {result.cycles} cycles, "
        f"{result.path_length:.1f} m, {result.collisions} collisions, {result.holds} holds"
    )
    return result


def audit_log(source: Union[str, Path, Iterable[Dict[str, Any]]]) -> AuditResult:
    """
    Check that every executed edge had a safe verdict at plan time.

    Args:
        source: mission log path or already loaded records
    """
    records = read_jsonl(source) if isinstance(source, (str, Path)) else list(source)
    violations = []
    executed = 0
    collisions = 0
    for record in records:
        epsilon = record.get('epsilon', 0.5)
        for edge in record.get('executed', []):
            executed += 1
            collisions += int(edge.get('collisions', 0))
            if not edge.get('safe', False) or edge.get('p', 0.0) < epsilon:
                violations.append(
                    f"cycle {record.get('cycle')}: edge {edge.get('from')} -> {edge.get('to')} "
                    f"flown with p={edge.get('p')} below epsilon {epsilon}"
                )
    if violations:
        logger.warning(f"Mission log audit: {len(violations)} executed edge(s) without a safe verdict")
    return AuditResult(not violations, executed, violations, collisions)


def run_missions(world: World, cfg: PlannerConfig, seeds: Sequence[int],
                 out_dir: Optional[Union[str, Path]] = None) -> List[MissionResult]:
    """Run one mission per seed; writes missions.csv under out_dir"""
    results = []
    snapshot_dir = Path(out_dir) / 'snapshots' if out_dir is not None else None
    for seed in seeds:
        results.append(run_mission(world, cfg, seed, out_dir, snapshot_dir))
    if out_dir is not None:
        write_csv(Path(out_dir) / 'missions.csv', SUMMARY_HEADER, (r.summary_row() for r in results))
    clean = sum(1 for r in results if r.clean)
    logger.info(f"Missions: {clean}/{len(results)} completed without collision")
    return results
