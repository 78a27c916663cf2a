"""
End-to-end safety queries.
"""

import json
import math

import numpy as np
import pytest

from psp.bindings import InputBinding
from psp.corpus import load_fixture, load_program
from psp.errors import InferenceError
from psp.frontend import parse_source
from psp.frontend.validator import validate
from psp.inference import compile_program, evaluate_model, query_safety
from psp.oracle import estimate


def _phi(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def battery_closed_form(binding):
    """Product over high-altitude steps of Pr(batteryNow > batteryThresh)"""
    height = binding['height']
    level = binding['logbatteryLevel']
    p = 1.0
    for i in range(len(height) - 3):
        if not any(height[j] > binding['heightThresh'] for j in range(i, i + 3)):
            continue
        variance = i * binding['variance']
        margin = level[i] - binding['batteryThresh']
        p *= (1.0 if margin > 0 else 0.0) if variance == 0 else _phi(margin / math.sqrt(variance))
    return p


def test_battery_matches_closed_form():
    binding = load_fixture('battery_aware_flight')
    verdict = query_safety(load_program('battery_aware_flight'), binding, epsilon=0.5)
    expected = _phi(0.3 / math.sqrt(0.02)) * _phi(0.25 / math.sqrt(0.03)) * _phi(1.0)
    assert battery_closed_form(binding) == pytest.approx(expected)
    assert verdict.p_lower == pytest.approx(expected, abs=1e-9)
    assert verdict.certified
    assert verdict.method == 'tree'
    assert len(verdict.per_leaf) == 4


def test_single_waypoint_verdicts():
    program = load_program('obstacle_trajectory')
    binding = load_fixture('obstacle_single_safe')
    safe = query_safety(program, binding, epsilon=0.9)
    assert safe.safe and safe.certified
    assert safe.method == 'leaf'
    assert safe.p_lower == pytest.approx(0.977250, abs=1e-6)
    assert not query_safety(program, binding, epsilon=0.99).safe


def test_obstacle_lower_bound_below_oracle():
    program = load_program('obstacle_avoidance')
    binding = load_fixture('obstacle_avoidance')
    verdict = query_safety(program, binding, epsilon=0.5)
    assert verdict.certified
    assert 0.5 < verdict.p_lower < 0.977250
    oracle = estimate(compile_program(program, binding).slp, 50000, seed=11)
    assert verdict.p_lower <= oracle.p_hat + 3 * oracle.standard_error


def test_collision_is_not_certified():
    verdict = query_safety(load_program('collision_avoidance'), load_fixture('collision_avoidance'))
    assert not verdict.certified
    assert verdict.notes
    assert len(verdict.per_leaf) == 10
    assert 0.0 <= verdict.p_lower <= 1.0


def test_constant_program():
    verdict = query_safety(load_program('always_safe'), InputBinding(), epsilon=1.0)
    assert verdict.p_lower == 1.0
    assert verdict.safe and verdict.certified
    assert verdict.method == 'constant'
    assert verdict.per_leaf == []


def test_compiled_model_needs_no_binding():
    compiled = compile_program(load_program('obstacle_avoidance'), load_fixture('obstacle_avoidance'))
    from_model = query_safety(compiled.model, epsilon=0.5)
    from_program = query_safety(load_program('obstacle_avoidance'), load_fixture('obstacle_avoidance'),
                                epsilon=0.5)
    assert from_model.p_lower == from_program.p_lower


def test_validated_program_is_recompiled():
    binding = load_fixture('battery_aware_flight')
    vp = validate(load_program('battery_aware_flight'), binding)
    assert query_safety(vp, binding).p_lower == pytest.approx(battery_closed_form(binding), abs=1e-9)


@pytest.mark.parametrize("epsilon", [-0.1, 1.5])
def test_epsilon_out_of_range(epsilon):
    with pytest.raises(InferenceError, match="epsilon"):
        query_safety(load_program('always_safe'), InputBinding(), epsilon=epsilon)


def test_program_without_binding():
    with pytest.raises(InferenceError, match="binding is required"):
        query_safety(load_program('always_safe'))


def test_zero_epsilon_is_always_safe():
    program = parse_source("bool P() { x = Gaussian(0, 1); return x > 100; }")
    verdict = query_safety(program, InputBinding(), epsilon=0.0)
    assert verdict.p_lower < 1e-100
    assert verdict.safe


def test_sampled_leaves_are_noted_and_seeded():
    program = parse_source("bool P() { x = Gaussian(0, 1); y = Gaussian(0, 1); return x * y > 0; }")
    a = query_safety(program, InputBinding(), seed=5, mc_samples=4000)
    b = query_safety(program, InputBinding(), seed=5, mc_samples=4000)
    assert a.p_lower == b.p_lower
    assert any("sampling" in note for note in a.notes)
    assert a.per_leaf[0].to_dict()['n'] == 4000


def test_evaluate_model_reports_method():
    gm = compile_program(load_program('obstacle_avoidance'), load_fixture('obstacle_avoidance')).model
    p, leaves, certificate, method = evaluate_model(gm, seed=0)
    assert method == 'tree'
    assert len(leaves) == 10
    assert certificate.certified


def test_verdict_serializes():
    verdict = query_safety(load_program('collision_avoidance'), load_fixture('collision_avoidance'))
    data = json.loads(json.dumps(verdict.to_dict()))
    assert data['method'] == verdict.method
    assert len(data['per_leaf']) == 10
    assert data['per_leaf'][0]['method'] == 'AnalyticInterval'


def test_anticorrelated_components_are_not_certified():
    program = parse_source(
        "bool P(double[2] Mu, double[2, 2] Sigma) {"
        " w ~ Gaussian(Mu, Sigma); a = w[0] > 0; b = w[1] > 0; return a && b; }"
    )
    binding = InputBinding({'Mu': np.zeros(2), 'Sigma': np.array([[1.0, -0.9], [-0.9, 1.0]])})
    verdict = query_safety(program, binding, epsilon=0.2)
    # the product of the marginals overshoots the true 0.0718
    assert verdict.p_lower == pytest.approx(0.25)
    assert not verdict.certified
    assert any("negatively correlated" in note for note in verdict.notes)
    oracle = estimate(compile_program(program, binding).slp, 20000, seed=2)
    assert oracle.p_hat < 0.1


@pytest.mark.parametrize("name", ['obstacle_avoidance', 'battery_aware_flight', 'collision_avoidance'])
def test_verdict_is_monotone_in_epsilon(name):
    program = load_program(name)
    gm = compile_program(program, load_fixture(name)).model
    epsilons = np.linspace(0.0, 1.0, 41)
    verdicts = [query_safety(gm, epsilon=float(e), seed=3, verbose=False) for e in epsilons]
    assert len({v.p_lower for v in verdicts}) == 1
    safe = [v.safe for v in verdicts]
    assert safe == sorted(safe, reverse=True)
    assert safe[0]
    p = verdicts[0].p_lower
    assert query_safety(gm, epsilon=p, seed=3).safe
    assert p == 1.0 or not query_safety(gm, epsilon=min(1.0, p + 1e-9), seed=3).safe
