"""
DOT export of a compiled graphical model, for debugging and docs.
"""

from graphviz import Digraph

from psp.compiler.affine import NON_AFFINE
from psp.compiler.graph import Constant, GraphicalModel, NodeKind
from psp.ops import OP_SYMBOLS

_SHAPES = {
    NodeKind.PRIMITIVE_DRAW: 'ellipse',
    NodeKind.CONTINUOUS_OP: 'box',
    NodeKind.COMPARATOR: 'diamond',
    NodeKind.BOOLEAN_OP: 'octagon',
    NodeKind.BOOLEAN_CONST: 'doublecircle',
}


def _label(gm: GraphicalModel, n: int) -> str:
    node = gm.nodes[n]
    if node.kind is NodeKind.PRIMITIVE_DRAW:
        return f"v{n} ~ {node.draw.family.value}[{node.component}]"
    if node.kind is NodeKind.BOOLEAN_CONST:
        return 'true' if node.value else 'false'
    if node.kind is NodeKind.COMPARATOR and n in gm.comparators:
        spec = gm.comparators[n]
        form = 'non-affine' if spec.form is NON_AFFINE else str(spec.form)
        return f"v{n}: [{form}] {OP_SYMBOLS[spec.op]} {spec.threshold:g}"
    args = [f"{o.value}" if isinstance(o, Constant) else f"v{o}" for o in node.operands]
    if len(args) == 1:
        return f"v{n} = {OP_SYMBOLS[node.op]}{args[0]}"
    return f"v{n} = {args[0]} {OP_SYMBOLS[node.op]} {args[1]}"


def to_dot(gm: GraphicalModel) -> str:
    """DOT source of the model; the output node is drawn bold"""
    graph = Digraph(name=gm.name)
    graph.attr(rankdir='BT')
    for n in gm.topological_order():
        attrs = {'shape': _SHAPES[gm.nodes[n].kind]}
        if n == gm.output:
            attrs['style'] = 'bold'
        graph.node(str(n), _label(gm, n), **attrs)
    for u, v in gm.graph.edges():
        graph.edge(str(u), str(v))
    return graph.source
