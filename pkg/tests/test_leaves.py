"""
Bernoulli leaves: closed-form Gaussian tails, merged intervals, exact
discrete enumeration and the Monte Carlo fallback.
"""

import math

import pytest

from psp.bindings import InputBinding
from psp.compiler import NodeKind
from psp.corpus import load_fixture, load_program
from psp.errors import InferenceError
from psp.frontend import parse_source
from psp.inference import (
    LeafMethod, build_leaves, compile_program, marginalize_leaf, marginalize_leaf_mc, normal_cdf,
    wilson_interval, wilson_lower,
)
from psp.inference.leaves import find_interval_pairs


def model_of(source, values=None):
    return compile_program(parse_source(source), InputBinding(values or {})).model


def single_waypoint(fixture):
    return compile_program(load_program('obstacle_trajectory'), load_fixture(fixture)).model


def _phi(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def test_single_waypoint_closed_form():
    gm = single_waypoint('obstacle_single_safe')
    (c,) = gm.of_kind(NodeKind.COMPARATOR)
    leaf = marginalize_leaf(c, gm)
    assert leaf.method is LeafMethod.ANALYTIC_GAUSSIAN
    assert leaf.p_true == pytest.approx(0.977250, abs=1e-6)
    assert leaf.sign == 1


def test_symmetric_posterior_gives_one_half():
    gm = single_waypoint('obstacle_single_symmetric')
    (c,) = gm.of_kind(NodeKind.COMPARATOR)
    assert marginalize_leaf(c, gm).p_true == pytest.approx(0.5)


@pytest.mark.parametrize("z", [-8.0, -2.0, 0.0, 1.5, 8.0])
def test_normal_cdf(z):
    assert normal_cdf(z) == pytest.approx(_phi(z), abs=1e-12)


def test_normal_cdf_keeps_far_tail():
    # 1 - erf would round to zero here
    assert 0.0 < normal_cdf(-30.0) < 1e-190


def test_two_sided_band_is_merged():
    gm = model_of("bool P(double T) { d = Gaussian(0, 1); return (d > T) || (d < -T); }", {'T': 1.0})
    pairs = find_interval_pairs(gm)
    assert list(pairs) == [gm.output]
    leaves = build_leaves(gm, seed=0, mc_samples=1000, lower_bounds=True)
    assert len(leaves) == 1
    leaf = leaves[0]
    assert leaf.method is LeafMethod.ANALYTIC_INTERVAL
    assert len(leaf.covers) == 2
    assert leaf.p_true == pytest.approx(2.0 * (1.0 - _phi(1.0)), abs=1e-9)


def test_inner_interval_is_merged():
    gm = model_of("bool P() { d = Gaussian(1, 4); return (d > -1) && (d <= 3); }")
    (leaf,) = build_leaves(gm, seed=0, mc_samples=1000, lower_bounds=True)
    assert leaf.method is LeafMethod.ANALYTIC_INTERVAL
    assert leaf.p_true == pytest.approx(_phi(1.0) - _phi(-1.0), abs=1e-9)


def test_empty_interval_is_zero():
    gm = model_of("bool P() { d = Gaussian(0, 1); return (d > 2) && (d < 1); }")
    (leaf,) = build_leaves(gm, seed=0, mc_samples=1000, lower_bounds=True)
    assert leaf.p_true == 0.0


def test_zero_variance_comparator_is_a_step():
    gm = compile_program(load_program('battery_aware_flight'), load_fixture('battery_aware_flight')).model
    leaves = build_leaves(gm, seed=0, mc_samples=1000, lower_bounds=True)
    # step 0 draws Gaussian(4.0, 0) against 3.6
    assert leaves[0].p_true == 1.0
    assert all(leaf.method is LeafMethod.ANALYTIC_GAUSSIAN for leaf in leaves)
    assert all(not leaf.shares_ancestry_with for leaf in leaves)


def test_bernoulli_comparator_is_enumerated():
    gm = model_of("bool P() { b = Bernoulli(0.3); c = Bernoulli(0.6); return b + c >= 1; }")
    leaf = marginalize_leaf(gm.output, gm)
    assert leaf.method is LeafMethod.EXACT_DISCRETE
    assert leaf.p_true == pytest.approx(1.0 - 0.7 * 0.4)


def test_non_affine_comparator_rejected_by_closed_form():
    gm = model_of("bool P() { x = Gaussian(0, 1); y = Gaussian(0, 1); return x * y > 0; }")
    with pytest.raises(InferenceError, match="not affine"):
        marginalize_leaf(gm.output, gm)


def test_monte_carlo_leaf():
    gm = model_of("bool P() { x = Gaussian(0, 1); y = Gaussian(0, 1); return x * y > 0; }")
    leaf = marginalize_leaf_mc(gm.output, gm, n=20000, seed=3)
    assert leaf.method is LeafMethod.MONTE_CARLO
    assert leaf.p_true == leaf.p_point
    assert leaf.p_point == pytest.approx(0.5, abs=0.03)
    again = marginalize_leaf_mc(gm.output, gm, n=20000, seed=3)
    assert again.p_point == leaf.p_point


def test_monte_carlo_lower_bound_sits_below_the_estimate():
    gm = model_of("bool P() { x = Gaussian(0, 1); y = Gaussian(0, 1); return x * y > 0; }")
    leaf = marginalize_leaf_mc(gm.output, gm, n=5000, seed=1, lower_bound=True, confidence=0.99)
    assert leaf.lower_bound
    assert leaf.p_true < leaf.p_point
    assert leaf.p_point - leaf.p_true < 0.05


def test_monte_carlo_needs_enough_samples():
    gm = model_of("bool P() { x = Gaussian(0, 1); y = Gaussian(0, 1); return x * y > 0; }")
    with pytest.raises(InferenceError, match="at least 100"):
        marginalize_leaf_mc(gm.output, gm, n=99, seed=0)


def test_gamma_comparator_falls_back_to_sampling():
    gm = model_of("bool P() { g = Gamma(2.0, 1.0); return g > 1; }")
    (leaf,) = build_leaves(gm, seed=0, mc_samples=20000, lower_bounds=False)
    assert leaf.method is LeafMethod.MONTE_CARLO
    # Pr(Gamma(2, 1) > 1) = 2 / e
    assert leaf.p_true == pytest.approx(2.0 / math.e, abs=0.02)


def test_shared_ancestry_on_obstacle():
    gm = compile_program(load_program('obstacle_avoidance'), load_fixture('obstacle_avoidance')).model
    leaves = build_leaves(gm, seed=0, mc_samples=1000, lower_bounds=True)
    assert len(leaves) == 10
    for leaf in leaves:
        assert len(leaf.shares_ancestry_with) == 9
        assert leaf.node not in leaf.shares_ancestry_with


def test_wilson_interval_brackets_the_estimate():
    low, high = wilson_interval(50, 100, 0.95)
    assert low < 0.5 < high
    assert 0.5 - low == pytest.approx(high - 0.5)
    assert low == pytest.approx(0.4038, abs=1e-3)


def test_wilson_bounds_at_the_edges():
    assert wilson_lower(0, 100, 0.99) == 0.0
    assert 0.9 < wilson_lower(100, 100, 0.99) < 1.0
    assert wilson_interval(100, 100, 0.99)[1] == 1.0
    with pytest.raises(ValueError):
        wilson_lower(0, 0, 0.99)
