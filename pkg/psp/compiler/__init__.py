"""
Model compiler - induces the graphical model of an unrolled program and
annotates it for inference.
"""

import logging

from psp.compiler.affine import NON_AFFINE, AffineForm, PrimitiveFamily
from psp.compiler.analysis import ComparatorSpec, TruthTable, affine_analysis, assign_cpts
from psp.compiler.dot import to_dot
from psp.compiler.graph import Constant, GraphicalModel, GraphNode, NodeKind, induce_graph
from psp.slp import StraightLineProgram

logger = logging.getLogger(__name__)


def compile_model(slp: StraightLineProgram) -> GraphicalModel:
    """Induce, analyze and annotate a folded program"""
    gm = assign_cpts(affine_analysis(induce_graph(slp)))
    logger.debug(f"Compiled '{gm.name}': {len(gm)} nodes, {len(gm.primitives)} primitive(s)")
    return gm


__all__ = [
    'AffineForm', 'ComparatorSpec', 'Constant', 'GraphNode', 'GraphicalModel',
    'NON_AFFINE', 'NodeKind', 'PrimitiveFamily', 'TruthTable', 'affine_analysis',
    'assign_cpts', 'compile_model', 'induce_graph', 'to_dot',
]
