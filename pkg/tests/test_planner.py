"""
Planner harness: course geometry, range sensor, obstacle belief, RRT* with
edge pruning and the mission log audit.
"""

import json

import numpy as np
import pytest

from psp.artifacts import read_jsonl
from psp.bindings import InputBinding
from psp.inference.engine import query_safety
from psp.planner import (
    Gate, ObstacleBelief, PlannerConfig, PlanTree, World, WorldError, audit_log, build_tree,
    check_edge, default_course, load_planner_config, load_world, plan_cycle, run_mission, save_world,
    sense, update_belief,
)
from psp.planner.mission import _traverse
from psp.planner.rrt import (
    STATUS_GOAL, STATUS_HOLD, STATUS_PROGRESS, EdgeVerdict, PlanResult, edge_program, edge_waypoints,
    validated_edge_program,
)
from psp.planner.sensor import FREE, OBSTACLE
from psp.planner.snapshots import render_snapshot
from psp.planner.world import square, world_from_dict


def small_world():
    """One 20 m block whose west face sits at x = 40"""
    gates = [Gate('A', (10.0, 50.0)), Gate('B', (190.0, 50.0))]
    return World((0.0, 0.0, 200.0, 100.0), gates, [square(50.0, 50.0, 20.0)])


# ---------------------------------------------------------------------------
# World
# ---------------------------------------------------------------------------

def test_default_course_layout():
    world = default_course()
    assert len(world.gates) == 6
    assert len(world.known_obstacles) == 3
    assert len(world.unknown_obstacles) == 2
    assert world.known_view().unknown_obstacles == []


def test_hidden_block_sits_on_the_racing_line():
    world = default_course()
    a, b = np.array([350.0, 75.0]), np.array([450.0, 75.0])
    assert world.collisions(a, b) == 1
    assert world.known_view().segment_free(a, b)
    assert not world.segment_free(a, b)


def test_island_blocks_the_diagonal():
    world = default_course().known_view()
    assert not world.segment_free([100.0, 250.0], [700.0, 250.0])
    assert not world.point_free([400.0, 250.0])
    assert world.point_free([100.0, 250.0])
    assert not world.point_free([900.0, 250.0])


def test_clockwise_polygons_are_normalised():
    clockwise = [[40.0, 40.0], [40.0, 60.0], [60.0, 60.0], [60.0, 40.0]]
    world = World((0.0, 0.0, 200.0, 100.0), [Gate('A', (10.0, 50.0)), Gate('B', (190.0, 50.0))], [clockwise])
    assert not world.point_free([50.0, 50.0])
    assert world.point_free([70.0, 50.0])


@pytest.mark.parametrize("kwargs,message", [
    ({'bounds': (10.0, 0.0, 0.0, 100.0)}, "invalid bounds"),
    ({'gates': [Gate('A', (10.0, 50.0))]}, "at least two gates"),
    ({'gates': [Gate('A', (50.0, 50.0)), Gate('B', (190.0, 50.0))]}, "inside an obstacle"),
    ({'gates': [Gate('A', (10.0, 50.0)), Gate('B', (290.0, 50.0))]}, "outside the course"),
    ({'known_obstacles': [square(195.0, 50.0, 20.0)]}, "leaves the course"),
    ({'known_obstacles': [[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]]}, "degenerate"),
    ({'known_obstacles': [[[0.0, 0.0], [1.0, 1.0]]]}, "at least 3"),
])
def test_world_errors(kwargs, message):
    args = {
        'bounds': (0.0, 0.0, 200.0, 100.0),
        'gates': [Gate('A', (10.0, 50.0)), Gate('B', (190.0, 50.0))],
        'known_obstacles': [square(50.0, 50.0, 20.0)],
    }
    args.update(kwargs)
    with pytest.raises(WorldError, match=message):
        World(**args)


def test_malformed_world_description():
    with pytest.raises(WorldError, match="malformed"):
        world_from_dict({'bounds': [0, 0, 10, 10]})


def test_world_file(tmp_path):
    path = save_world(default_course(), tmp_path / 'course.json')
    world = load_world(path)
    assert world.to_dict() == default_course().to_dict()
    broken = tmp_path / 'broken.json'
    broken.write_text('{"bounds": ')
    with pytest.raises(WorldError, match="invalid JSON"):
        load_world(broken)


# ---------------------------------------------------------------------------
# Sensor
# ---------------------------------------------------------------------------

def test_scan_hits_the_block():
    scan = sense(small_world(), (30.0, 50.0), radius=50.0, n_rays=4)
    assert scan.n_rays == 4
    assert scan.n_hits == 1
    assert scan.ranges[0] == pytest.approx(10.0)
    assert scan.ranges[1:] == pytest.approx([50.0, 50.0, 50.0])
    obstacle_points = scan.points[scan.labels == OBSTACLE]
    np.testing.assert_allclose(obstacle_points, [[40.0, 50.0], [42.0, 50.0]], atol=1e-9)
    # one free sample before the hit, ten along each clear ray
    assert len(scan.labels) == 2 + 1 + 3 * 10


def test_zero_radius_scan_is_empty():
    scan = sense(small_world(), (30.0, 50.0), radius=0.0, n_rays=8)
    assert scan.n_hits == 0
    assert scan.points.shape == (0, 2)
    assert len(scan.labels) == 0


def test_range_noise_needs_a_generator():
    with pytest.raises(ValueError, match="random generator"):
        sense(small_world(), (30.0, 50.0), radius=50.0, n_rays=4, range_noise=0.5)


def test_noisy_ranges_stay_in_range():
    rng = np.random.default_rng(0)
    scan = sense(small_world(), (30.0, 50.0), radius=50.0, n_rays=36, rng=rng, range_noise=2.0)
    assert np.all((scan.ranges >= 0.0) & (scan.ranges <= 50.0))


# ---------------------------------------------------------------------------
# Belief
# ---------------------------------------------------------------------------

def test_prior_is_confidently_clear():
    belief = ObstacleBelief.prior(default_course())
    assert belief.shape == (25, 40)
    mean, cov = belief.posterior(3, 4)
    np.testing.assert_allclose(mean, [0.0, 0.0, -1.0])
    np.testing.assert_allclose(cov, np.eye(3) * 0.04)
    assert np.all(belief.obstacle_probability([[110.0, 110.0], [410.0, 250.0]]) < 1e-6)


def test_mirrored_observations_keep_slopes_at_zero():
    belief = ObstacleBelief.prior(default_course())
    centre = belief.cell_center(5, 5)
    points = [centre + [6.0, 0.0], centre - [6.0, 0.0]]
    updated = update_belief(belief, points, [OBSTACLE, OBSTACLE])
    mean, _ = updated.posterior(5, 5)
    assert mean[0] == pytest.approx(0.0, abs=1e-12)
    assert mean[1] == pytest.approx(0.0, abs=1e-12)
    assert mean[2] > -1.0
    assert updated.counts[5, 5] == 2
    assert belief.counts[5, 5] == 0


def test_repeated_hits_flip_the_cell():
    belief = ObstacleBelief.prior(default_course())
    centre = belief.cell_center(5, 5)
    updated = update_belief(belief, np.tile(centre, (50, 1)), np.full(50, OBSTACLE))
    assert updated.obstacle_probability(centre)[0] > 0.5
    assert updated.obstacle_probability(belief.cell_center(5, 7))[0] < 1e-6


def test_update_order_does_not_matter():
    belief = ObstacleBelief.prior(default_course())
    scan = sense(default_course(), (380.0, 75.0), radius=60.0, n_rays=90)
    half = len(scan.labels) // 2
    a = update_belief(update_belief(belief, scan.points[:half], scan.labels[:half]),
                      scan.points[half:], scan.labels[half:])
    b = update_belief(update_belief(belief, scan.points[half:], scan.labels[half:]),
                      scan.points[:half], scan.labels[:half])
    np.testing.assert_allclose(a.precision, b.precision)
    np.testing.assert_allclose(a.info, b.info)


def test_points_outside_the_grid_are_ignored():
    belief = ObstacleBelief.prior(default_course())
    assert update_belief(belief, [[-10.0, 5.0]], [OBSTACLE]) is belief
    with pytest.raises(ValueError, match="labels"):
        update_belief(belief, [[10.0, 5.0]], [OBSTACLE, OBSTACLE])


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------

def test_planner_settings(tmp_path):
    assert load_planner_config(epsilon=0.8).epsilon == 0.8
    path = tmp_path / 'planner.json'
    path.write_text(json.dumps({'n_nodes': 40, 'epsilon': 0.7}))
    cfg = load_planner_config(path)
    assert cfg.n_nodes == 40 and cfg.epsilon == 0.7
    assert load_planner_config(path, epsilon=0.9).epsilon == 0.9
    path.write_text(json.dumps({'n_node': 40}))
    with pytest.raises(ValueError, match="unknown planner setting"):
        load_planner_config(path)


@pytest.mark.parametrize("kwargs", [
    {'epsilon': 1.5}, {'n_nodes': 1}, {'steer': 0.0}, {'sensor_radius': -1.0}, {'traverse_fraction': 0.0},
])
def test_invalid_settings(kwargs):
    with pytest.raises(ValueError):
        PlannerConfig(**kwargs)


# ---------------------------------------------------------------------------
# RRT* and edge checks
# ---------------------------------------------------------------------------

def test_plan_tree_rewire_shifts_subtree_costs():
    tree = PlanTree([0.0, 0.0])
    a = tree.add([10.0, 0.0], 0, 10.0)
    b = tree.add([10.0, 10.0], a, 20.0)
    c = tree.add([10.0, 20.0], b, 30.0)
    tree.check()
    tree.rewire(b, 0, float(np.hypot(10.0, 10.0)))
    tree.check()
    assert tree.parent[b] == 0
    assert tree.cost[c] == pytest.approx(np.hypot(10.0, 10.0) + 10.0)
    assert tree.edges() == [(0, a), (0, b), (b, c)]


def test_edge_waypoints():
    points = edge_waypoints([0.0, 0.0], [10.0, 0.0], 1.0)
    assert len(points) == 10
    np.testing.assert_allclose(points[0], [1.0, 0.0])
    np.testing.assert_allclose(points[-1], [10.0, 0.0])
    assert len(edge_waypoints([0.0, 0.0], [10.0, 0.0], 3.0)) == 4


def test_tree_respects_the_known_map():
    world = default_course().known_view()
    cfg = PlannerConfig(n_nodes=80)
    tree = build_tree(world, world.gates[0].center, world.gates[1].center, cfg, np.random.default_rng(0))
    assert len(tree) == 80
    tree.check()
    for parent, child in tree.edges():
        assert world.segment_free(tree.positions[parent], tree.positions[child])
        assert tree.edge_length(parent, child) <= cfg.steer + 1e-9


def test_edge_under_the_prior_is_safe():
    belief = ObstacleBelief.prior(default_course())
    verdict = check_edge(belief, [100.0, 110.0], [120.0, 110.0], PlannerConfig())
    assert verdict.safe and verdict.certified
    assert verdict.p > 0.99
    assert verdict.cells >= 1


def test_edge_through_an_observed_obstacle_is_pruned():
    belief = ObstacleBelief.prior(default_course())
    centre = belief.cell_center(5, 5)
    belief = update_belief(belief, np.tile(centre, (50, 1)), np.full(50, OBSTACLE))
    verdict = check_edge(belief, [100.0, 110.0], [120.0, 110.0], PlannerConfig(), parent=3, child=4)
    assert not verdict.safe
    assert verdict.p < 0.01
    assert verdict.to_dict()['child'] == 4

def test_edge_check_queries_only_the_ends_of_each_cell():
    belief = ObstacleBelief.prior(default_course())
    belief = update_belief(belief, [[112.0, 104.0], [108.0, 116.0]], [OBSTACLE, FREE])
    waypoints = edge_waypoints([95.0, 100.0], [135.0, 118.0], 1.0)
    rows, cols = belief.cell_of(waypoints)
    rng = np.random.default_rng(3)
    for row, col in set(zip(rows.tolist(), cols.tolist())):
        index = np.flatnonzero((rows == row) & (cols == col))
        assert np.all(np.diff(index) == 1)
        mu, sigma = belief.posterior(row, col)
        w = rng.multivariate_normal(mu, sigma, size=4000)
        score = w @ belief.features(waypoints[index], rows[index], cols[index]).T
        all_free = np.all(score < 0, axis=1)
        ends_free = (score[:, 0] < 0) & (score[:, -1] < 0)
        np.testing.assert_array_equal(all_free, ends_free)


def test_edge_check_is_bounded_by_the_full_waypoint_product():
    belief = ObstacleBelief.prior(default_course())
    cfg = PlannerConfig()
    a, b = [95.0, 100.0], [135.0, 118.0]
    verdict = check_edge(belief, a, b, cfg)
    waypoints = edge_waypoints(a, b, cfg.waypoint_spacing)
    rows, cols = belief.cell_of(waypoints)
    full = 1.0
    for row, col in sorted(set(zip(rows.tolist(), cols.tolist()))):
        mask = (rows == row) & (cols == col)
        mu, sigma = belief.posterior(row, col)
        binding = InputBinding({
            'x': belief.features(waypoints[mask], rows[mask], cols[mask]),
            'Mu': -mu,
            'Sigma': sigma,
        })
        full *= query_safety(edge_program(), binding, epsilon=cfg.epsilon, verbose=False).p_lower
    # the edge's first and last waypoints are each the end of a queried group
    free_ends = 1.0 - belief.obstacle_probability(waypoints[[0, -1]])
    assert verdict.certified
    assert full - 1e-12 <= verdict.p <= free_ends.min() + 1e-12
    assert verdict.cells == len(set(zip(rows.tolist(), cols.tolist())))


def test_edge_program_is_validated_once_per_waypoint_count():
    assert validated_edge_program(2) is validated_edge_program(2)


def test_plan_cycle_under_the_prior():
    world = default_course(unknown=False)
    belief = ObstacleBelief.prior(world)
    cfg = PlannerConfig(n_nodes=60)
    plan = plan_cycle(world.gates[0].center, world.known_view(), belief, cfg, seed=1,
                      goal=world.gates[1].center)
    assert plan.status in (STATUS_GOAL, STATUS_PROGRESS)
    assert plan.pruned == 0
    assert plan.path[0] == 0
    assert len(plan.verdicts) == len(plan.tree) - 1
    start = np.linalg.norm(world.gates[0].center - world.gates[1].center)
    end = np.linalg.norm(plan.waypoints[-1] - world.gates[1].center)
    assert end < start


def test_plan_cycle_holds_when_nothing_is_safe():
    world = default_course(unknown=False)
    belief = ObstacleBelief.prior(world)
    cfg = PlannerConfig(n_nodes=30, epsilon=1.0)
    plan = plan_cycle(world.gates[0].center, world.known_view(), belief, cfg, seed=1,
                      goal=world.gates[1].center)
    assert plan.status == STATUS_HOLD
    assert plan.path == []
    assert plan.pruned == len(plan.verdicts)


def _straight_plan(status):
    tree = PlanTree([0.0, 0.0])
    tree.add([20.0, 0.0], 0, 20.0)
    tree.add([40.0, 0.0], 1, 40.0)
    verdicts = {i: EdgeVerdict(i - 1, i, 0.9, True, True, 1) for i in (1, 2)}
    return PlanResult(tree, status, [0, 1, 2], verdicts, 2)


def test_traverse_flies_part_of_the_path():
    flown = _traverse(_straight_plan(STATUS_PROGRESS), PlannerConfig())
    # half of 40 m
    assert len(flown) == 1
    assert flown[0]['length'] == pytest.approx(20.0)
    flown = _traverse(_straight_plan(STATUS_PROGRESS), PlannerConfig(traverse_fraction=0.75))
    assert [e['length'] for e in flown] == pytest.approx([20.0, 10.0])
    assert flown[1]['to'] == pytest.approx([30.0, 0.0])


def test_traverse_finishes_a_short_goal_path():
    cfg = PlannerConfig(max_traverse=50.0)
    flown = _traverse(_straight_plan(STATUS_GOAL), cfg)
    assert sum(e['length'] for e in flown) == pytest.approx(40.0)


def test_snapshot_is_svg():
    world = default_course()
    belief = ObstacleBelief.prior(world)
    svg = render_snapshot(world, belief, _straight_plan(STATUS_PROGRESS), trail=[[0.0, 0.0], [20.0, 0.0]])
    assert '<svg' in svg


# ---------------------------------------------------------------------------
# Mission log
# ---------------------------------------------------------------------------

def test_audit_flags_unsafe_edges():
    records = [
        {'cycle': 0, 'epsilon': 0.5, 'executed': [{'from': [0, 0], 'to': [1, 0], 'p': 0.9, 'safe': True}]},
        {'cycle': 1, 'epsilon': 0.5, 'executed': [
            {'from': [1, 0], 'to': [2, 0], 'p': 0.4, 'safe': False, 'collisions': 1},
        ]},
    ]
    result = audit_log(records)
    assert not result.ok
    assert result.executed_edges == 2
    assert result.collisions == 1
    assert "cycle 1" in result.violations[0]


def test_audit_of_missing_log(tmp_path):
    result = audit_log(tmp_path / 'absent.jsonl')
    assert result.ok
    assert result.executed_edges == 0


@pytest.mark.slow
def test_mission_log_passes_audit(tmp_path):
    cfg = PlannerConfig(n_nodes=120, max_cycles=60)
    result = run_mission(default_course(), cfg, seed=0, out_dir=tmp_path)
    records = read_jsonl(result.log_path)
    assert len(records) == result.cycles
    audit = audit_log(result.log_path)
    assert audit.ok, audit.violations
    assert audit.collisions == result.collisions
