"""
Lower-bound certificate: when the product of leaf probabilities is a
guaranteed under-estimate.
"""

import numpy as np
import pytest

from psp.bindings import InputBinding
from psp.corpus import load_fixture, load_program
from psp.frontend import parse_source
from psp.inference import build_leaves, build_network, certify_lower_bound, compile_program


def certify(gm, lower_bounds=True):
    leaves = build_leaves(gm, seed=0, mc_samples=2000, lower_bounds=lower_bounds)
    net = build_network(gm, {leaf.node: leaf.p_true for leaf in leaves})
    return certify_lower_bound(gm, leaves, net)


def model_of(source, values=None):
    return compile_program(parse_source(source), InputBinding(values or {})).model


def test_obstacle_and_chain_is_certified():
    gm = compile_program(load_program('obstacle_avoidance'), load_fixture('obstacle_avoidance')).model
    cert = certify(gm)
    assert cert.certified, cert.reasons
    assert cert.pairs_checked == 45
    assert cert.min_correlation > 0.0


def test_independent_leaves_need_no_check():
    gm = compile_program(load_program('battery_aware_flight'), load_fixture('battery_aware_flight')).model
    cert = certify(gm)
    assert cert.certified
    assert cert.pairs_checked == 0
    assert cert.min_correlation is None


def test_independent_leaves_under_or_are_certified():
    cert = certify(model_of("bool P() { x = Gaussian(0, 1); y = Gaussian(1, 1); return (x > 0) || (y > 0); }"))
    assert cert.certified


def test_negating_gate_is_not_certified():
    cert = certify(model_of("bool P() { x = Gaussian(0, 1); return (x > 0) && !(2 * x > 1); }"))
    assert not cert.certified
    assert any("negating gate" in r for r in cert.reasons)


def test_negative_correlation_is_not_certified():
    cert = certify(model_of("bool P() { x = Gaussian(0, 1); return (x > 0) && (2 * x < 5); }"))
    assert not cert.certified
    assert any("negatively correlated" in r for r in cert.reasons)
    assert cert.min_correlation == pytest.approx(-2.0)


def test_correlated_leaves_under_or_are_not_certified():
    cert = certify(model_of("bool P() { x = Gaussian(0, 1); return (x > 0) || (2 * x > 1); }"))
    assert not cert.certified
    assert any("non-AND gate" in r for r in cert.reasons)


def test_shared_two_sided_leaves_are_not_certified():
    gm = compile_program(load_program('collision_avoidance'), load_fixture('collision_avoidance')).model
    cert = certify(gm)
    assert not cert.certified
    assert any("two-sided" in r for r in cert.reasons)


def test_point_estimate_leaf_is_not_certified():
    gm = model_of("bool P() { x = Gaussian(0, 1); y = Gaussian(0, 1); return x * y > 0; }")
    assert certify(gm, lower_bounds=True).certified
    cert = certify(gm, lower_bounds=False)
    assert not cert.certified
    assert any("point estimate" in r for r in cert.reasons)
    assert cert.to_dict()['certified'] is False


CROSS_COMPONENT = (
    "bool P(double[2] Mu, double[2, 2] Sigma) {"
    " w ~ Gaussian(Mu, Sigma); a = w[0] > 0; b = w[1] > 0; return a && b; }"
)


def cross_component_model(rho):
    return model_of(CROSS_COMPONENT, {'Mu': np.zeros(2), 'Sigma': np.array([[1.0, rho], [rho, 1.0]])})


def test_components_of_one_draw_share_ancestry():
    gm = cross_component_model(-0.9)
    leaves = build_leaves(gm, seed=0, mc_samples=2000, lower_bounds=True)
    assert len(leaves) == 2
    first, second = leaves
    assert first.primitives.isdisjoint(second.primitives)
    assert first.shares_ancestry_with == {second.node}
    assert second.shares_ancestry_with == {first.node}


def test_negatively_correlated_components_are_not_certified():
    cert = certify(cross_component_model(-0.9))
    assert not cert.certified
    assert any("negatively correlated" in r for r in cert.reasons)
    assert cert.pairs_checked == 1
    assert cert.min_correlation == pytest.approx(-0.9)


def test_positively_correlated_components_are_certified():
    cert = certify(cross_component_model(0.5))
    assert cert.certified, cert.reasons
    assert cert.pairs_checked == 1
    assert cert.min_correlation == pytest.approx(0.5)


def test_components_under_or_are_not_certified():
    gm = model_of(CROSS_COMPONENT.replace('a && b', 'a || b'),
                  {'Mu': np.zeros(2), 'Sigma': np.array([[1.0, 0.5], [0.5, 1.0]])})
    cert = certify(gm)
    assert not cert.certified
    assert any("non-AND gate" in r for r in cert.reasons)
