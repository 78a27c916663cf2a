"""
Pretty-printer: renders a ProgramAst back to canonical PSP text.

parse(pretty(ast)) == ast for every accepted program; loops always print
in the C-style form with braces.
"""

from typing import List

from psp.frontend.syntax import (
    Assign, Binary, DistributionSpec, Expr, ForLoop, GetLength, Index, Literal,
    Name, ProgramAst, Sample, TypeSpec, Unary,
)
from psp.ops import OP_SYMBOLS, PRECEDENCE, ValueType

_TYPE_NAMES = {ValueType.INT: 'int', ValueType.REAL: 'double', ValueType.BOOL: 'bool'}
_INDENT = '    '


def pretty(program: ProgramAst) -> str:
    lines: List[str] = []
    params = ', '.join(f"{format_type(p.type)} {p.name}" for p in program.params)
    lines.append(f"{format_type(program.return_type)} {program.name}({params})")
    lines.append('{')
    for stmt in program.body:
        _statement(stmt, 1, lines)
    lines.append(f"{_INDENT}return {format_expr(program.return_expr)};")
    lines.append('}')
    return '\n'.join(lines) + '\n'


def format_type(type_spec: TypeSpec) -> str:
    name = _TYPE_NAMES[type_spec.base]
    if type_spec.dims is None:
        return name
    dims = ', '.join('' if d is None else str(d) for d in type_spec.dims)
    return f"{name}[{dims}]"


def _statement(stmt, depth: int, lines: List[str]):
    pad = _INDENT * depth
    if isinstance(stmt, ForLoop):
        cmp = '<=' if stmt.inclusive else '<'
        lines.append(
            f"{pad}for (int {stmt.var} = {format_expr(stmt.start)}; "
            f"{stmt.var} {cmp} {format_expr(stmt.stop)}; {stmt.var}++)"
        )
        lines.append(f"{pad}{{")
        for inner in stmt.body:
            _statement(inner, depth + 1, lines)
        lines.append(f"{pad}}}")
        return
    decl = f"{format_type(stmt.decl)} " if stmt.decl is not None else ''
    if isinstance(stmt, Sample):
        op = '~' if stmt.tilde else '='
        lines.append(f"{pad}{decl}{stmt.target} {op} {format_dist(stmt.dist)};")
    elif isinstance(stmt, Assign):
        lines.append(f"{pad}{decl}{stmt.target} = {format_expr(stmt.value)};")
    else:
        raise TypeError(f"unknown statement {stmt!r}")


def format_dist(dist: DistributionSpec) -> str:
    return f"{dist.family.value}({', '.join(format_expr(p) for p in dist.params)})"


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Literal):
        if expr.type is ValueType.BOOL:
            return 'true' if expr.value else 'false'
        if expr.type is ValueType.REAL:
            text = repr(float(expr.value))
            return text if any(c in text for c in '.en') else text + '.0'
        return str(int(expr.value))
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, Index):
        return f"{expr.target}[{', '.join(format_expr(i) for i in expr.indices)}]"
    if isinstance(expr, GetLength):
        return f"{expr.target}.GetLength({format_expr(expr.dim)})"
    if isinstance(expr, Unary):
        inner = format_expr(expr.operand)
        if isinstance(expr.operand, Binary):
            inner = f"({inner})"
        return f"{OP_SYMBOLS[expr.op]}{inner}"
    if isinstance(expr, Binary):
        precedence = PRECEDENCE[expr.op]
        left = format_expr(expr.left)
        right = format_expr(expr.right)
        if isinstance(expr.left, Binary) and PRECEDENCE[expr.left.op] < precedence:
            left = f"({left})"
        # left-associative: equal precedence on the right needs parentheses
        if isinstance(expr.right, Binary) and PRECEDENCE[expr.right.op] <= precedence:
            right = f"({right})"
        return f"{left} {OP_SYMBOLS[expr.op]} {right}"
    raise TypeError(f"unknown expression {expr!r}")
