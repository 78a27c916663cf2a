"""
Unroller - expands a validated program and a binding into a straight-line
program, then folds everything that does not depend on a random draw.
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from psp.bindings import InputBinding
from psp.errors import UnrollError
from psp.frontend.syntax import (
    Assign, Binary as BinaryExpr, DistributionSpec, Expr, Family, ForLoop,
    GetLength, Index, Literal, Name, Sample, Unary as UnaryExpr,
)
from psp.frontend.validator import ValidatedProgram
from psp.ops import (
    ValueType, apply_binary, apply_unary, binary_result_type, to_python,
    unary_result_type,
)
from psp.slp import (
    Binary, ConstLoad, Draw, InputLoad, Instruction, StraightLineProgram, Unary,
)

logger = logging.getLogger(__name__)

# Relative tolerance for covariance symmetry / PSD checks
_COV_TOL = 1e-9


class _Unroller:
    """Walks the AST once per binding, emitting one instruction per operation"""

    def __init__(self, vp: ValidatedProgram, binding: InputBinding):
        self.vp = vp
        self.binding = binding
        self.instructions: List[Instruction] = []
        self.next_id = 0
        # name -> (var id, declared type); innermost scope last
        self.scopes: List[Dict[str, Tuple[int, ValueType]]] = [{}]
        self.arrays: Dict[str, Tuple[Tuple[int, ...], ValueType]] = {}
        self.indices: Dict[str, int] = {}
        self.known: Dict[int, Any] = {}
        self.input_memo: Dict[Tuple[str, Tuple[int, ...]], int] = {}

    # -- emission -----------------------------------------------------------

    def fresh(self) -> int:
        var = self.next_id
        self.next_id += 1
        return var

    def emit_const(self, value, value_type: ValueType) -> int:
        dest = self.fresh()
        value = to_python(value, value_type)
        self.instructions.append(ConstLoad(dest, value, value_type))
        self.known[dest] = value
        return dest

    def emit_input(self, name: str, index: Tuple[int, ...], value_type: ValueType, loc) -> int:
        key = (name, index)
        if key in self.input_memo:
            return self.input_memo[key]
        raw = self.binding[name]
        if index:
            shape = raw.shape
            for axis, (i, size) in enumerate(zip(index, shape)):
                if not 0 <= i < size:
                    raise UnrollError(
                        f"index {i} out of bounds for dimension {axis} of '{name}' (size {size})", loc
                    )
            raw = raw[index]
        dest = self.fresh()
        value = to_python(raw, value_type)
        self.instructions.append(InputLoad(dest, name, index, value, value_type))
        self.known[dest] = value
        self.input_memo[key] = dest
        return dest

    # -- scopes -------------------------------------------------------------

    def lookup(self, name: str) -> Optional[Tuple[int, ValueType]]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def bind(self, name: str, var: int, value_type: ValueType, declare: bool):
        if not declare:
            for scope in reversed(self.scopes):
                if name in scope:
                    scope[name] = (var, scope[name][1])
                    return
        self.scopes[-1][name] = (var, value_type)

    # -- statements ---------------------------------------------------------

    def run(self) -> StraightLineProgram:
        self.block(self.vp.ast.body)
        output, _ = self.expr(self.vp.ast.return_expr)
        return StraightLineProgram(self.vp.name, tuple(self.instructions), output)

    def block(self, body):
        for stmt in body:
            if isinstance(stmt, ForLoop):
                self.loop(stmt)
            elif isinstance(stmt, Sample):
                self.sample(stmt)
            elif isinstance(stmt, Assign):
                var, value_type = self.expr(stmt.value)
                declared = stmt.decl.base if stmt.decl is not None else None
                existing = self.lookup(stmt.target)
                if declared is None:
                    declared = existing[1] if existing is not None else value_type
                self.bind(stmt.target, var, declared, stmt.decl is not None or existing is None)

    def loop(self, stmt: ForLoop):
        start = self.static_value(stmt.start)
        stop = self.static_value(stmt.stop) + (1 if stmt.inclusive else 0)
        for value in range(int(start), int(stop)):
            self.indices[stmt.var] = value
            self.scopes.append({})
            try:
                self.block(stmt.body)
            finally:
                self.scopes.pop()
        self.indices.pop(stmt.var, None)

    def sample(self, stmt: Sample):
        dist = stmt.dist
        result_type = ValueType.INT if dist.family is Family.BERNOULLI else ValueType.REAL
        if stmt.decl is not None:
            result_type = stmt.decl.base
        draw = self.evaluate_draw(dist, result_type)
        self.instructions.append(draw)
        if draw.is_vector:
            self.arrays[stmt.target] = (draw.dests, result_type)
            return
        existing = self.lookup(stmt.target)
        if stmt.decl is None and existing is not None:
            result_type = existing[1]
        self.bind(stmt.target, draw.dest, result_type, stmt.decl is not None or existing is None)

    def evaluate_draw(self, dist: DistributionSpec, result_type: ValueType) -> Draw:
        family = dist.family
        loc = dist.loc
        if family is Family.GAUSSIAN and isinstance(dist.params[0], Name) \
                and self.is_array_param(dist.params[0].ident):
            mean = np.asarray(self.binding[dist.params[0].ident], dtype=float)
            cov = np.asarray(self.binding[dist.params[1].ident], dtype=float)
            _check_covariance(cov, loc)
            dests = tuple(self.fresh() for _ in range(mean.shape[0]))
            return Draw(
                dests, family, (tuple(float(m) for m in mean),),
                tuple(tuple(float(c) for c in row) for row in cov), result_type,
            )

        params = tuple(float(self.static_value(p)) for p in dist.params)
        if not all(np.isfinite(params)):
            raise UnrollError(f"{family.value} parameters evaluate to non-finite values {params}", loc)
        if family is Family.GAUSSIAN and params[1] < 0:
            raise UnrollError(f"Gaussian variance evaluates to {params[1]}, must be non-negative", loc)
        if family in (Family.GAMMA, Family.BETA) and min(params) <= 0:
            raise UnrollError(f"{family.value} parameters must be positive, got {params}", loc)
        if family is Family.BERNOULLI and not 0.0 <= params[0] <= 1.0:
            raise UnrollError(f"Bernoulli probability {params[0]} is outside [0, 1]", loc)
        return Draw((self.fresh(),), family, params, None, result_type)

    def is_array_param(self, name: str) -> bool:
        shape = self.vp.schema.get(name)
        return shape is not None and shape.is_array

    # -- expressions --------------------------------------------------------

    def expr(self, expr: Expr) -> Tuple[int, ValueType]:
        """Emit instructions for expr; returns (var id, type)"""
        if isinstance(expr, Literal):
            return self.emit_const(expr.value, expr.type), expr.type
        if isinstance(expr, Name):
            if expr.ident in self.indices:
                return self.emit_const(self.indices[expr.ident], ValueType.INT), ValueType.INT
            bound = self.lookup(expr.ident)
            if bound is not None:
                return bound
            shape = self.vp.schema[expr.ident]
            return self.emit_input(expr.ident, (), shape.type, expr.loc), shape.type
        if isinstance(expr, Index):
            index = tuple(int(self.static_value(i)) for i in expr.indices)
            if expr.target in self.arrays:
                dests, value_type = self.arrays[expr.target]
                if len(index) != 1 or not 0 <= index[0] < len(dests):
                    raise UnrollError(
                        f"index {list(index)} out of bounds for '{expr.target}' (size {len(dests)})", expr.loc
                    )
                return dests[index[0]], value_type
            shape = self.vp.schema[expr.target]
            return self.emit_input(expr.target, index, shape.type, expr.loc), shape.type
        if isinstance(expr, GetLength):
            return self.emit_const(self.static_value(expr), ValueType.INT), ValueType.INT
        if isinstance(expr, UnaryExpr):
            arg, arg_type = self.expr(expr.operand)
            result_type = unary_result_type(expr.op, arg_type)
            dest = self.fresh()
            self.instructions.append(Unary(dest, expr.op, arg, result_type))
            if arg in self.known:
                self.known[dest] = to_python(apply_unary(expr.op, self.known[arg]), result_type)
            return dest, result_type
        if isinstance(expr, BinaryExpr):
            left, left_type = self.expr(expr.left)
            right, right_type = self.expr(expr.right)
            result_type = binary_result_type(expr.op, left_type, right_type)
            _check_int_divisor(expr.op, self.known.get(right), result_type, expr.loc)
            dest = self.fresh()
            self.instructions.append(Binary(dest, expr.op, left, right, result_type))
            if left in self.known and right in self.known:
                value = apply_binary(expr.op, self.known[left], self.known[right], result_type)
                self.known[dest] = to_python(value, result_type)
            return dest, result_type
        raise UnrollError(f"unsupported expression {type(expr).__name__}", getattr(expr, 'loc', None))

    def static_value(self, expr: Expr):
        """Evaluate a deterministic expression without emitting instructions"""
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, Name):
            if expr.ident in self.indices:
                return self.indices[expr.ident]
            bound = self.lookup(expr.ident)
            if bound is not None:
                if bound[0] not in self.known:
                    raise UnrollError(f"'{expr.ident}' is not deterministic here", expr.loc)
                return self.known[bound[0]]
            value = self.binding[expr.ident]
            return value.item() if isinstance(value, np.ndarray) else value
        if isinstance(expr, Index):
            index = tuple(int(self.static_value(i)) for i in expr.indices)
            if expr.target in self.arrays:
                raise UnrollError(f"'{expr.target}' is a random draw", expr.loc)
            array = self.binding[expr.target]
            for axis, (i, size) in enumerate(zip(index, array.shape)):
                if not 0 <= i < size:
                    raise UnrollError(
                        f"index {i} out of bounds for dimension {axis} of '{expr.target}' (size {size})", expr.loc
                    )
            return array[index].item()
        if isinstance(expr, GetLength):
            dim = int(self.static_value(expr.dim))
            if expr.target in self.arrays:
                return len(self.arrays[expr.target][0])
            return int(self.binding[expr.target].shape[dim])
        if isinstance(expr, UnaryExpr):
            return apply_unary(expr.op, self.static_value(expr.operand)).item()
        if isinstance(expr, BinaryExpr):
            left = self.static_value(expr.left)
            right = self.static_value(expr.right)
            both_int = _is_int(left) and _is_int(right)
            if both_int:
                _check_int_divisor(expr.op, right, ValueType.INT, expr.loc)
            result = apply_binary(expr.op, left, right, ValueType.INT if both_int else ValueType.REAL)
            result = np.asarray(result).item()
            if both_int and expr.op in ('add', 'sub', 'mul', 'div', 'mod'):
                result = int(result)
            return result
        raise UnrollError(f"unsupported expression {type(expr).__name__}", getattr(expr, 'loc', None))


def _is_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, (bool, np.bool_))


def _check_int_divisor(op: str, divisor, result_type: ValueType, loc):
    """Integer / and % by a known zero have no value"""
    if op in ('div', 'mod') and result_type is ValueType.INT and divisor is not None and divisor == 0:
        name = 'division' if op == 'div' else 'modulo'
        raise UnrollError(f"integer {name} by zero", loc)


def _check_covariance(cov: np.ndarray, loc):
    scale = max(1.0, float(np.max(np.abs(cov)))) if cov.size else 1.0
    if not np.allclose(cov, cov.T, atol=_COV_TOL * scale):
        raise UnrollError("covariance matrix is not symmetric", loc)
    if cov.size and float(np.min(np.linalg.eigvalsh(cov))) < -_COV_TOL * scale:
        raise UnrollError("covariance matrix is not positive semi-definite", loc)


def unroll(vp: ValidatedProgram, binding: InputBinding) -> StraightLineProgram:
    """
    Expand every loop and decompose every expression for one binding.

    Args:
        vp: validated program
        binding: concrete inputs (must satisfy vp.schema)

    Returns:
        StraightLineProgram in single-assignment form

    Raises:
        UnrollError: index out of bounds, invalid distribution parameters
    """
    slp = _Unroller(vp, binding).run()
    logger.debug(
        f"Unrolled '{vp.name}': {len(slp)} instructions, {len(slp.draws())} draw(s)"
    )
    return slp


def constant_fold(slp: StraightLineProgram) -> StraightLineProgram:
    """
    Replace everything that no draw reaches by a ConstLoad.

    Boolean identities (true && c, false || c, ...) forward the other
    operand; the forwarded instruction is dropped and its uses are renamed.
    Semantics are preserved for every assignment of the draws.
    """
    folded: List[Instruction] = []
    consts: Dict[int, Tuple[Any, ValueType]] = {}
    alias: Dict[int, int] = {}

    def resolve(var: int) -> int:
        while var in alias:
            var = alias[var]
        return var

    def const(dest: int, value, value_type: ValueType):
        value = to_python(value, value_type)
        consts[dest] = (value, value_type)
        folded.append(ConstLoad(dest, value, value_type))

    for instr in slp.instructions:
        if isinstance(instr, ConstLoad):
            const(instr.dest, instr.value, instr.type)
        elif isinstance(instr, InputLoad):
            const(instr.dest, instr.value, instr.type)
        elif isinstance(instr, Draw):
            folded.append(instr)
        elif isinstance(instr, Unary):
            arg = resolve(instr.arg)
            if arg in consts:
                const(instr.dest, apply_unary(instr.op, consts[arg][0]), instr.type)
            else:
                folded.append(Unary(instr.dest, instr.op, arg, instr.type))
        elif isinstance(instr, Binary):
            left, right = resolve(instr.left), resolve(instr.right)
            if left in consts and right in consts:
                _check_int_divisor(instr.op, consts[right][0], instr.type, None)
                value = apply_binary(instr.op, consts[left][0], consts[right][0], instr.type)
                const(instr.dest, value, instr.type)
                continue
            if instr.op in ('and', 'or') and (left in consts or right in consts):
                known, other = (left, right) if left in consts else (right, left)
                absorbing = instr.op == 'or'
                if bool(consts[known][0]) == absorbing:
                    const(instr.dest, absorbing, ValueType.BOOL)
                else:
                    alias[instr.dest] = other
                continue
            folded.append(Binary(instr.dest, instr.op, left, right, instr.type))

    output = resolve(slp.output)
    result = StraightLineProgram(slp.name, tuple(folded), output)
    logger.debug(
        f"Folded '{slp.name}': {len(slp)} -> {len(result)} instructions, "
        f"{result.count(ConstLoad)} constant(s)"
    )
    return result
