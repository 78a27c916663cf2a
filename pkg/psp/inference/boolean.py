"""
Exact inference on the boolean part of a model once every comparator has
been replaced by an independent Bernoulli leaf.

Tree-shaped networks (no boolean node feeds two consumers) are solved in
one bottom-up pass; anything else goes through variable elimination with a
greedy min-fill ordering.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from psp.compiler import GraphicalModel, NodeKind, TruthTable
from psp.config import config
from psp.errors import InferenceError

logger = logging.getLogger(__name__)

# numpy.einsum accepts at most 52 distinct subscripts
_EINSUM_LABELS = 52

Factor = Tuple[Tuple[int, ...], np.ndarray]


@dataclass
class BooleanNetwork:
    """
    Leaves with prior probabilities plus deterministic gates above them.

    graph has an edge parent -> child for every gate input.
    """
    priors: Dict[int, float]
    tables: Dict[int, TruthTable]
    output: int
    graph: nx.DiGraph = field(default_factory=nx.DiGraph)

    @property
    def is_tree(self) -> bool:
        return all(self.graph.out_degree(n) <= 1 for n in self.graph.nodes)

    def negating_gates(self) -> Dict[int, Optional[int]]:
        """
        Lowest-numbered non-monotone gate on some path from each node to the
        output (the node itself included), or None.

        Every node of the network reaches the output, so one pass in reverse
        topological order covers all paths.
        """
        below: Dict[int, Optional[int]] = {}
        for n in reversed(list(nx.topological_sort(self.graph))):
            found = [below[c] for c in self.graph.successors(n) if below[c] is not None]
            table = self.tables.get(n)
            if table is not None and not table.is_monotone:
                found.append(n)
            below[n] = min(found) if found else None
        return below


def build_network(gm: GraphicalModel, leaf_probs: Mapping[int, float]) -> BooleanNetwork:
    """
    Boolean network from a compiled model and its leaf probabilities.

    Gates are the model's boolean nodes downstream of the leaves; comparators
    covered by a merged leaf disappear with it.
    """
    graph = nx.DiGraph()
    tables: Dict[int, TruthTable] = {}
    stack = [gm.output]
    seen = set()
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        graph.add_node(n)
        if n in leaf_probs:
            continue
        node = gm.nodes[n]
        if node.kind is not NodeKind.BOOLEAN_OP:
            raise InferenceError(f"node v{n} ({node.kind.value}) has no leaf probability")
        tables[n] = gm.cpts[n]
        for parent in tables[n].parents:
            graph.add_edge(parent, n)
            stack.append(parent)
    priors = {n: float(leaf_probs[n]) for n in graph.nodes if n in leaf_probs}
    return BooleanNetwork(priors, tables, gm.output, graph)


def boolean_inference(network: BooleanNetwork, max_width: Optional[int] = None) -> float:
    """
    Pr(output = True) treating leaves as independent.

    Args:
        network: leaves and gates
        max_width: induced width cap for elimination (default PSP_MAX_WIDTH)

    Raises:
        InferenceError: elimination width above the cap
    """
    if network.output in network.priors:
        return network.priors[network.output]
    if network.is_tree:
        return _tree_pass(network)
    return _eliminate(network, config.PSP_MAX_WIDTH if max_width is None else max_width)


def _tree_pass(network: BooleanNetwork) -> float:
    """Bottom-up marginals; exact because no subtree is shared"""
    marginal: Dict[int, float] = dict(network.priors)
    for n in nx.topological_sort(network.graph):
        if n in marginal:
            continue
        table = network.tables[n]
        parents_p = [marginal[p] for p in table.parents]
        total = 0.0
        for key, value in table.rows:
            if not value:
                continue
            weight = 1.0
            for bit, p in zip(key, parents_p):
                weight *= p if bit else 1.0 - p
            total += weight
        marginal[n] = min(1.0, max(0.0, total))
    return marginal[network.output]


# ---------------------------------------------------------------------------
# Variable elimination
# ---------------------------------------------------------------------------

def _factors(network: BooleanNetwork) -> List[Factor]:
    factors: List[Factor] = []
    for n, p in network.priors.items():
        factors.append(((n,), np.array([1.0 - p, p])))
    for n, table in network.tables.items():
        truth = table.as_array()
        cpt = np.stack([1.0 - truth, truth], axis=-1)
        factors.append((table.parents + (n,), cpt))
    # Evidence: output is true
    factors.append(((network.output,), np.array([0.0, 1.0])))
    return factors


def min_fill_order(factors: Iterable[Factor]) -> Tuple[List[int], int]:
    """
    Greedy min-fill elimination order over the factors' interaction graph.

    Returns:
        (order, induced width)
    """
    graph = nx.Graph()
    for scope, _ in factors:
        graph.add_nodes_from(scope)
        for i, a in enumerate(scope):
            for b in scope[i + 1:]:
                graph.add_edge(a, b)

    order: List[int] = []
    width = 0
    while graph.number_of_nodes():
        best, best_key = None, None
        for v in graph.nodes:
            neighbours = list(graph.neighbors(v))
            fill = sum(
                1 for i, a in enumerate(neighbours) for b in neighbours[i + 1:]
                if not graph.has_edge(a, b)
            )
            key = (fill, len(neighbours), v)
            if best_key is None or key < best_key:
                best, best_key = v, key
        neighbours = list(graph.neighbors(best))
        width = max(width, len(neighbours))
        for i, a in enumerate(neighbours):
            for b in neighbours[i + 1:]:
                graph.add_edge(a, b)
        graph.remove_node(best)
        order.append(best)
    return order, width


def _product_sum_out(factors: List[Factor], var: int) -> Factor:
    """Multiply factors and sum var out with one einsum call"""
    scope: List[int] = []
    for vars_, _ in factors:
        for v in vars_:
            if v not in scope:
                scope.append(v)
    if len(scope) > _EINSUM_LABELS:
        raise InferenceError(f"factor over {len(scope)} variables exceeds einsum's label limit")
    label = {v: k for k, v in enumerate(scope)}
    out = tuple(v for v in scope if v != var)
    operands = []
    for vars_, table in factors:
        operands.extend([table, [label[v] for v in vars_]])
    result = np.einsum(*operands, [label[v] for v in out])
    return out, result


def _eliminate(network: BooleanNetwork, max_width: int) -> float:
    factors = _factors(network)
    order, width = min_fill_order(factors)
    if width > max_width:
        raise InferenceError(
            f"boolean elimination width {width} exceeds the cap of {max_width}; "
            f"use the sampling path (oracle) for this program"
        )
    logger.debug(f"Eliminating {len(order)} boolean variables, induced width {width}")
    for var in order:
        touching = [f for f in factors if var in f[0]]
        if not touching:
            continue
        factors = [f for f in factors if var not in f[0]]
        factors.append(_product_sum_out(touching, var))
    total = 1.0
    for _, table in factors:
        total *= float(np.asarray(table))
    return min(1.0, max(0.0, total))
