"""
Boolean inference over independent leaves: tree pass, variable elimination
and the width cap.
"""

import itertools

import networkx as nx
import pytest

from psp.compiler import TruthTable
from psp.corpus import load_fixture, load_program
from psp.errors import InferenceError
from psp.inference import BooleanNetwork, boolean_inference, build_network, compile_program, min_fill_order
from psp.inference.boolean import _factors


def gate(parents, fn):
    rows = tuple((key, bool(fn(*key))) for key in itertools.product((False, True), repeat=len(parents)))
    return TruthTable(tuple(parents), rows)


def network(priors, tables, output):
    graph = nx.DiGraph()
    graph.add_nodes_from(priors)
    for n, table in tables.items():
        graph.add_node(n)
        for p in table.parents:
            graph.add_edge(p, n)
    return BooleanNetwork(priors, tables, output, graph)


def brute_force(net):
    """Pr(output) by enumerating every leaf assignment"""
    leaves = sorted(net.priors)
    total = 0.0
    for bits in itertools.product((False, True), repeat=len(leaves)):
        weight = 1.0
        values = dict(zip(leaves, bits))
        for leaf, bit in values.items():
            weight *= net.priors[leaf] if bit else 1.0 - net.priors[leaf]
        for n in nx.topological_sort(net.graph):
            if n not in values:
                table = net.tables[n]
                values[n] = table.lookup(tuple(values[p] for p in table.parents))
        if values[net.output]:
            total += weight
    return total


def test_and_of_two_leaves():
    net = network({1: 0.9, 2: 0.9}, {3: gate((1, 2), lambda a, b: a and b)}, 3)
    assert net.is_tree
    assert boolean_inference(net) == pytest.approx(0.81)


def test_negation():
    net = network({1: 0.3}, {2: gate((1,), lambda a: not a)}, 2)
    assert boolean_inference(net) == pytest.approx(0.7)


def test_output_is_a_leaf():
    net = network({4: 0.25}, {}, 4)
    assert boolean_inference(net) == 0.25


def _diamond():
    # leaves 1 and 2 both feed gates 3 and 4
    tables = {
        3: gate((1, 2), lambda a, b: a and not b),
        4: gate((1, 2), lambda a, b: a or b),
        5: gate((2, 4), lambda a, b: a != b),
        6: gate((3, 5), lambda a, b: a or b),
    }
    return network({1: 0.35, 2: 0.8}, tables, 6)


def test_elimination_matches_enumeration():
    net = _diamond()
    assert not net.is_tree
    assert boolean_inference(net) == pytest.approx(brute_force(net), abs=1e-12)


def test_elimination_on_shared_chain():
    tables = {
        10: gate((1, 2), lambda a, b: a and b),
        11: gate((2, 3), lambda a, b: a or b),
        12: gate((10, 11, 3), lambda a, b, c: (a and b) or not c),
    }
    net = network({1: 0.6, 2: 0.2, 3: 0.9}, tables, 12)
    assert boolean_inference(net) == pytest.approx(brute_force(net), abs=1e-12)


def test_width_cap():
    with pytest.raises(InferenceError, match="exceeds the cap of 0"):
        boolean_inference(_diamond(), max_width=0)


def test_min_fill_order_covers_every_variable():
    net = _diamond()
    order, width = min_fill_order(_factors(net))
    assert sorted(order) == [1, 2, 3, 4, 5, 6]
    assert width >= 2


def test_negating_gates():
    # gates 3 and 5 are not monotone
    assert _diamond().negating_gates() == {1: 3, 2: 3, 3: 3, 4: 5, 5: 5, 6: None}


def test_negating_gates_all_monotone():
    net = network({1: 0.9, 2: 0.9}, {3: gate((1, 2), lambda a, b: a and b)}, 3)
    assert net.negating_gates() == {1: None, 2: None, 3: None}


def test_network_from_obstacle_model():
    gm = compile_program(load_program('obstacle_avoidance'), load_fixture('obstacle_avoidance')).model
    leaf_probs = {c: 0.9 for c in gm.comparators}
    net = build_network(gm, leaf_probs)
    assert net.is_tree
    assert len(net.priors) == 10
    assert len(net.tables) == 9
    assert boolean_inference(net) == pytest.approx(0.9 ** 10)


def test_network_needs_every_leaf():
    gm = compile_program(load_program('obstacle_avoidance'), load_fixture('obstacle_avoidance')).model
    leaf_probs = {c: 0.9 for c in list(gm.comparators)[1:]}
    with pytest.raises(InferenceError, match="no leaf probability"):
        build_network(gm, leaf_probs)
