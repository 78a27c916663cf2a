"""
Graphical model induced from a folded straight-line program.

One node per instruction that depends on a random draw and can reach the
output; an edge from every node-valued operand to its user. Constants stay
on the node as operand payloads.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import networkx as nx
import numpy as np

from psp.ops import COMPARISON_OPS, ValueType, apply_binary, apply_unary
from psp.slp import (
    Binary, ConstLoad, Draw, InputLoad, StraightLineProgram, Unary, operand_ids,
    sample_draw,
)

logger = logging.getLogger(__name__)


class NodeKind(str, Enum):
    PRIMITIVE_DRAW = "PrimitiveDraw"
    CONTINUOUS_OP = "ContinuousOp"
    COMPARATOR = "Comparator"
    BOOLEAN_OP = "BooleanOp"
    BOOLEAN_CONST = "BooleanConst"


@dataclass(frozen=True)
class Constant:
    """Random-free operand folded into its user"""
    value: Union[int, float, bool]
    type: ValueType


Operand = Union[int, Constant]


@dataclass(frozen=True)
class GraphNode:
    id: int
    kind: NodeKind
    type: ValueType
    op: Optional[str] = None
    operands: Tuple[Operand, ...] = ()
    # Primitive draws: (Draw instruction, component index)
    draw: Optional[Draw] = None
    component: int = 0
    # BooleanConst value
    value: Optional[bool] = None

    @property
    def parents(self) -> Tuple[int, ...]:
        """Distinct node operands in operand order"""
        seen: List[int] = []
        for operand in self.operands:
            if not isinstance(operand, Constant) and operand not in seen:
                seen.append(operand)
        return tuple(seen)

    @property
    def is_boolean(self) -> bool:
        return self.type is ValueType.BOOL


@dataclass
class GraphicalModel:
    """
    Directed graphical model of one program instance.

    forms, comparators and cpts are filled by affine_analysis and
    assign_cpts; the model is not modified after compile_model returns.
    """
    name: str
    graph: nx.DiGraph
    nodes: Dict[int, GraphNode]
    primitives: Tuple[int, ...]
    output: int
    forms: Dict[int, Any] = field(default_factory=dict)
    comparators: Dict[int, Any] = field(default_factory=dict)
    cpts: Dict[int, Any] = field(default_factory=dict)
    family: Any = None
    # graph is frozen, so these are computed once on first use
    _order: Optional[List[int]] = field(default=None, init=False, repr=False, compare=False)
    _primitive_sets: Optional[Dict[int, frozenset]] = field(default=None, init=False, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def kind_counts(self) -> Dict[NodeKind, int]:
        counts = {kind: 0 for kind in NodeKind}
        for node in self.nodes.values():
            counts[node.kind] += 1
        return counts

    def of_kind(self, kind: NodeKind) -> List[int]:
        return [n for n in self.topological_order() if self.nodes[n].kind is kind]

    def topological_order(self) -> List[int]:
        if self._order is None:
            self._order = list(nx.topological_sort(self.graph))
        return list(self._order)

    def ancestors(self, node: int) -> set:
        return nx.ancestors(self.graph, node)

    def primitive_ancestors(self, node: int) -> frozenset:
        """Asc(node) restricted to the primitive draws"""
        if self._primitive_sets is None:
            self._primitive_sets = self._propagate_primitives()
        return self._primitive_sets[node]

    def _propagate_primitives(self) -> Dict[int, frozenset]:
        sets: Dict[int, frozenset] = {}
        for n in self.topological_order():
            if self.nodes[n].kind is NodeKind.PRIMITIVE_DRAW:
                sets[n] = frozenset((n,))
            else:
                sets[n] = frozenset().union(*(sets[p] for p in self.graph.predecessors(n)))
        return sets

    def primitive_blocks(self, node: int) -> frozenset:
        """Draw instructions (by first destination) behind the node's primitives"""
        return frozenset(self.nodes[p].draw.dests[0] for p in self.primitive_ancestors(node))

    def draws(self) -> List[Draw]:
        """Distinct Draw instructions behind the primitives, in program order"""
        seen = {}
        for p in self.primitives:
            draw = self.nodes[p].draw
            seen.setdefault(draw.dests, draw)
        return list(seen.values())

    def sample_primitives(self, rng: np.random.Generator, n: int,
                          only: Optional[frozenset] = None) -> Dict[int, np.ndarray]:
        """
        Ancestral samples of the primitives.

        Args:
            only: restrict to draws that feed at least one of these primitives
        """
        values: Dict[int, np.ndarray] = {}
        for draw in self.draws():
            if only is not None and not only.intersection(draw.dests):
                continue
            values.update(sample_draw(draw, rng, n))
        return values

    def evaluate(self, primitive_values: Mapping[int, np.ndarray],
                 targets: Optional[List[int]] = None) -> Dict[int, np.ndarray]:
        """
        Forward simulation over the node set.

        Args:
            primitive_values: samples for (at least) the needed primitives
            targets: nodes whose values are needed; None evaluates everything

        Returns:
            node id -> sample vector
        """
        if targets is None:
            needed = set(self.nodes)
        else:
            needed = set(targets)
            for t in targets:
                needed |= self.ancestors(t)
        values: Dict[int, Any] = {}
        for n in self.topological_order():
            if n not in needed:
                continue
            node = self.nodes[n]
            if node.kind is NodeKind.PRIMITIVE_DRAW:
                values[n] = primitive_values[n]
            elif node.kind is NodeKind.BOOLEAN_CONST:
                values[n] = np.bool_(node.value)
            else:
                args = [o.value if isinstance(o, Constant) else values[o] for o in node.operands]
                if len(args) == 1:
                    values[n] = apply_unary(node.op, args[0])
                else:
                    values[n] = apply_binary(node.op, args[0], args[1], node.type)
        return values


def _classify(instr, operand_types: List[ValueType]) -> NodeKind:
    if instr.type is not ValueType.BOOL:
        return NodeKind.CONTINUOUS_OP
    if isinstance(instr, Binary) and instr.op in COMPARISON_OPS and all(t.is_numeric for t in operand_types):
        return NodeKind.COMPARATOR
    return NodeKind.BOOLEAN_OP


def induce_graph(slp: StraightLineProgram) -> GraphicalModel:
    """
    Build the graphical model of a folded program.

    Only random-dependent instructions that are ancestors of the output
    become nodes; a multivariate draw becomes one primitive per component.

    Returns:
        GraphicalModel (without forms, comparators or CPTs)
    """
    definitions = slp.definitions()
    types = slp.types()

    random_ids = set()
    for instr in slp.instructions:
        if isinstance(instr, Draw):
            random_ids.update(instr.dests)
        elif any(o in random_ids for o in operand_ids(instr)):
            random_ids.add(instr.dest)

    graph = nx.DiGraph()
    nodes: Dict[int, GraphNode] = {}

    if slp.output not in random_ids:
        const = definitions[slp.output]
        value = bool(const.value) if isinstance(const, (ConstLoad, InputLoad)) else None
        if value is None:
            raise ValueError("constant output must be folded before graph induction")
        nodes[slp.output] = GraphNode(slp.output, NodeKind.BOOLEAN_CONST, ValueType.BOOL, value=value)
        graph.add_node(slp.output)
        model = GraphicalModel(slp.name, nx.freeze(graph), nodes, (), slp.output)
        logger.debug(f"Induced '{slp.name}': constant output {value}")
        return model

    # Backward reachability from the output over random operands
    keep = set()
    stack = [slp.output]
    while stack:
        var = stack.pop()
        if var in keep:
            continue
        keep.add(var)
        instr = definitions[var]
        if isinstance(instr, Draw):
            continue
        stack.extend(o for o in operand_ids(instr) if o in random_ids)

    primitives: List[int] = []
    for instr in slp.instructions:
        if isinstance(instr, Draw):
            for component, dest in enumerate(instr.dests):
                if dest in keep:
                    nodes[dest] = GraphNode(
                        dest, NodeKind.PRIMITIVE_DRAW, instr.type, draw=instr, component=component
                    )
                    graph.add_node(dest)
                    primitives.append(dest)
            continue
        if instr.dest not in keep:
            continue
        operands: List[Operand] = []
        for o in operand_ids(instr):
            if o in random_ids:
                operands.append(o)
            else:
                source = definitions[o]
                operands.append(Constant(source.value, source.type))
        kind = _classify(instr, [types[o] for o in operand_ids(instr)])
        nodes[instr.dest] = GraphNode(instr.dest, kind, instr.type, instr.op, tuple(operands))
        graph.add_node(instr.dest)
        for o in operands:
            if not isinstance(o, Constant):
                graph.add_edge(o, instr.dest)

    model = GraphicalModel(slp.name, nx.freeze(graph), nodes, tuple(primitives), slp.output)
    counts = model.kind_counts()
    logger.debug(
        f"Induced '{slp.name}': {len(nodes)} nodes, {graph.number_of_edges()} edges, "
        + ', '.join(f"{k.value}={v}" for k, v in counts.items() if v)
    )
    return model
