"""
Node annotations: affine forms for continuous nodes, threshold payloads for
comparators and deterministic truth tables for boolean nodes.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Tuple

import numpy as np

from psp.compiler.affine import (
    NON_AFFINE, AffineForm, Form, PrimitiveFamily, combine, negate,
)
from psp.compiler.graph import Constant, GraphicalModel, NodeKind
from psp.ops import FLIPPED_COMPARISON, ValueType, apply_binary, apply_unary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComparatorSpec:
    """
    Comparator normalized to `form op threshold`.

    needs_sampling is set when the compared quantity is not affine in the
    primitives; the comparator is then evaluated by ancestral sampling.
    """
    form: Form
    op: str
    threshold: float
    needs_sampling: bool = False


@dataclass(frozen=True)
class TruthTable:
    """Deterministic CPT of a boolean node over its distinct parents"""
    parents: Tuple[int, ...]
    rows: Tuple[Tuple[Tuple[bool, ...], bool], ...]

    def lookup(self, assignment: Tuple[bool, ...]) -> bool:
        for key, value in self.rows:
            if key == assignment:
                return value
        raise KeyError(assignment)

    def as_array(self) -> np.ndarray:
        """P(node = True | parents) indexed by parent values"""
        table = np.zeros((2,) * len(self.parents))
        for key, value in self.rows:
            table[tuple(int(k) for k in key)] = float(value)
        return table

    @cached_property
    def is_monotone(self) -> bool:
        """Non-decreasing in every parent"""
        return all(
            va <= vb
            for (a, va), (b, vb) in itertools.product(self.rows, repeat=2)
            if all(x <= y for x, y in zip(a, b))
        )


def affine_analysis(gm: GraphicalModel) -> GraphicalModel:
    """
    Attach an AffineForm (or NON_AFFINE) to every primitive and continuous node.

    Also records the joint law of the primitives on gm.family.
    """
    family = PrimitiveFamily()
    for block, draw in enumerate(gm.draws()):
        family.add_draw(block, draw.dests, draw.family, draw.params, draw.mean_vector(), draw.cov_matrix())
    gm.family = family

    forms: Dict[int, Form] = {}
    for n in gm.topological_order():
        node = gm.nodes[n]
        if node.kind is NodeKind.PRIMITIVE_DRAW:
            forms[n] = AffineForm.primitive(n)
        elif node.kind is NodeKind.CONTINUOUS_OP:
            forms[n] = _node_form(node, forms)
    gm.forms = forms
    non_affine = sum(1 for f in forms.values() if f is NON_AFFINE)
    logger.debug(f"Affine analysis '{gm.name}': {len(forms)} forms, {non_affine} non-affine")
    return gm


def _operand_form(operand, forms):
    if isinstance(operand, Constant):
        return float(operand.value)
    return forms[operand]


def _node_form(node, forms) -> Form:
    args = [_operand_form(o, forms) for o in node.operands]
    if len(args) == 1:
        return negate(args[0]) if node.op == 'neg' else NON_AFFINE
    # Integer division truncates, so it never stays affine
    if node.op == 'div' and node.type is ValueType.INT:
        return NON_AFFINE
    return combine(node.op, args[0], args[1])


def assign_cpts(gm: GraphicalModel) -> GraphicalModel:
    """
    Attach a ComparatorSpec to every comparator and a TruthTable to every
    boolean node with node parents.
    """
    comparators: Dict[int, ComparatorSpec] = {}
    cpts: Dict[int, TruthTable] = {}
    for n in gm.topological_order():
        node = gm.nodes[n]
        if node.kind is NodeKind.COMPARATOR:
            comparators[n] = _comparator_spec(node, gm.forms)
        elif node.kind is NodeKind.BOOLEAN_OP:
            cpts[n] = _truth_table(node)
    gm.comparators = comparators
    gm.cpts = cpts
    sampled = sum(1 for c in comparators.values() if c.needs_sampling)
    if sampled:
        logger.info(f"'{gm.name}': {sampled} comparator(s) routed to the sampling path")
    return gm


def _comparator_spec(node, forms) -> ComparatorSpec:
    left, right = node.operands
    op = node.op
    if isinstance(right, Constant):
        form, threshold = forms[left], float(right.value)
    elif isinstance(left, Constant):
        form, threshold = forms[right], float(left.value)
        op = FLIPPED_COMPARISON[op]
    else:
        lhs, rhs = forms[left], forms[right]
        form = NON_AFFINE if lhs is NON_AFFINE or rhs is NON_AFFINE else lhs - rhs
        threshold = 0.0
    return ComparatorSpec(form, op, threshold, needs_sampling=form is NON_AFFINE)


def _truth_table(node) -> TruthTable:
    parents = node.parents
    rows = []
    for assignment in itertools.product((False, True), repeat=len(parents)):
        env = dict(zip(parents, assignment))
        args = [bool(o.value) if isinstance(o, Constant) else env[o] for o in node.operands]
        if len(args) == 1:
            value = apply_unary(node.op, args[0])
        else:
            value = apply_binary(node.op, args[0], args[1], ValueType.BOOL)
        rows.append((assignment, bool(value)))
    return TruthTable(parents, tuple(rows))
