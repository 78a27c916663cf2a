"""
Inference engine - Bernoulli leaves, boolean elimination, lower-bound
certificate and the safety query.
"""

from psp.inference.boolean import BooleanNetwork, boolean_inference, build_network, min_fill_order
from psp.inference.certify import Certificate, certify_lower_bound
from psp.inference.engine import (
    CompiledInstance, SafetyVerdict, compile_program, evaluate_model, query_safety,
)
from psp.inference.gaussian import normal_cdf, wilson_interval, wilson_lower
from psp.inference.leaves import (
    BernoulliLeaf, LeafMethod, build_leaves, marginalize_leaf, marginalize_leaf_mc,
)

__all__ = [
    'BernoulliLeaf', 'BooleanNetwork', 'Certificate', 'CompiledInstance', 'LeafMethod',
    'SafetyVerdict', 'boolean_inference', 'build_leaves', 'build_network',
    'certify_lower_bound', 'compile_program', 'evaluate_model', 'marginalize_leaf',
    'marginalize_leaf_mc', 'min_fill_order', 'normal_cdf', 'query_safety',
    'wilson_interval', 'wilson_lower',
]
