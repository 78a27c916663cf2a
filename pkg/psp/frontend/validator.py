"""
Static validation of a parsed program against a binding schema.

Checks scoping (define before use, C-style block scopes for loop bodies),
types, the deterministic-parameter rule for draws, and that every loop
bound folds to an integer once array dimensions are known.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

from psp.bindings import BindingSchema, InputBinding, ParamShape, check_binding
from psp.errors import BindingError, ValidationError
from psp.frontend.syntax import (
    Assign, Binary, DistributionSpec, Expr, Family, ForLoop, GetLength, Index,
    Literal, Name, ProgramAst, Sample, TypeSpec, Unary, iter_loops,
)
from psp.ops import OperatorTypeError, ValueType, binary_result_type, unary_result_type

logger = logging.getLogger(__name__)

# Taint fixpoint over loop bodies converges in at most (#variables) rounds
_MAX_TAINT_ROUNDS = 64


@dataclass(frozen=True)
class LoopInfo:
    """Folded bounds of one loop; one (start, stop_exclusive) pair per visit"""
    loop_id: int
    var: str
    loc: Tuple[int, int]
    bounds: Tuple[Tuple[int, int], ...]

    @property
    def trip_counts(self) -> Tuple[int, ...]:
        return tuple(sorted({max(0, stop - start) for start, stop in self.bounds}))


@dataclass(frozen=True)
class ValidatedProgram:
    ast: ProgramAst
    schema: Mapping[str, ParamShape]
    loops: Tuple[LoopInfo, ...]
    random_vars: frozenset = field(default_factory=frozenset)

    @property
    def name(self) -> str:
        return self.ast.name


@dataclass
class _Symbol:
    type: ValueType
    kind: str                                  # param | var | index | draw
    shape: Optional[Tuple[int, ...]] = None    # arrays only
    random: bool = False

    @property
    def is_array(self) -> bool:
        return self.shape is not None


def validate(program: ProgramAst,
             schema: Union[BindingSchema, InputBinding, None] = None) -> ValidatedProgram:
    """
    Validate a program for a concrete set of parameter shapes.

    Args:
        program: parsed program
        schema: parameter shapes, or a binding to derive them from; None
                uses the declarations (every dimension must then be literal)

    Returns:
        ValidatedProgram with folded loop bounds

    Raises:
        ValidationError: scoping, typing, loop-bound or whitelist violations
        BindingError: schema does not fit the declarations
    """
    resolved = _resolve_schema(program, schema)
    checker = _Checker(program, resolved)
    checker.run()
    loops = _fold_loop_bounds(program, resolved)
    validated = ValidatedProgram(program, resolved, loops, frozenset(checker.random_names))
    logger.debug(
        f"Validated '{program.name}': {len(loops)} loop(s), "
        f"random vars {sorted(checker.random_names)}"
    )
    return validated


def _resolve_schema(program: ProgramAst, schema) -> Dict[str, ParamShape]:
    if isinstance(schema, InputBinding):
        return check_binding(program, schema)
    if schema is None:
        resolved = {}
        for param in program.params:
            if param.type.is_array and any(d is None for d in param.type.dims):
                raise ValidationError(
                    f"parameter '{param.name}' has open dimensions; supply a binding schema", param.loc
                )
            resolved[param.name] = ParamShape(param.type.base, param.type.dims)
        return resolved

    resolved = {}
    for param in program.params:
        if param.name not in schema:
            raise BindingError(f"schema has no entry for parameter '{param.name}'", param.loc)
        shape = schema[param.name]
        if param.type.is_array != shape.is_array:
            raise BindingError(f"parameter '{param.name}' array-ness differs from its declaration", param.loc)
        if param.type.is_array:
            if len(shape.shape) != param.type.rank:
                raise BindingError(f"parameter '{param.name}' rank differs from its declaration", param.loc)
            for want, got in zip(param.type.dims, shape.shape):
                if want is not None and want != got:
                    raise BindingError(f"parameter '{param.name}' dimensions differ from its declaration", param.loc)
        resolved[param.name] = ParamShape(param.type.base, shape.shape)
    return resolved


class _Checker:
    """Scope, type and taint pass"""

    def __init__(self, program: ProgramAst, schema: Mapping[str, ParamShape]):
        self.program = program
        self.schema = schema
        self.scopes: List[Dict[str, _Symbol]] = []
        self.random_names = set()
        self.changed = False

    def run(self):
        if self.program.return_type != TypeSpec(ValueType.BOOL):
            raise ValidationError("a PSP must be declared to return bool", self.program.loc)
        globals_ = {}
        for param in self.program.params:
            shape = self.schema[param.name]
            globals_[param.name] = _Symbol(param.type.base, 'param', shape.shape)
        self.scopes = [globals_]
        self.block(self.program.body)
        ret_type, ret_random = self.expr(self.program.return_expr)
        if ret_type is not ValueType.BOOL:
            raise ValidationError(
                f"program must return a boolean, got {ret_type.value}", self.program.return_expr.loc
            )

    # -- scopes -------------------------------------------------------------

    def lookup(self, name: str) -> Optional[_Symbol]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def define(self, name: str, symbol: _Symbol):
        self.scopes[-1][name] = symbol
        if symbol.random:
            self.random_names.add(name)

    def mark_random(self, name: str, symbol: _Symbol, random: bool):
        if random and not symbol.random:
            symbol.random = True
            self.changed = True
            self.random_names.add(name)

    # -- statements ---------------------------------------------------------

    def block(self, body):
        for stmt in body:
            if isinstance(stmt, Assign):
                self.assign(stmt)
            elif isinstance(stmt, Sample):
                self.sample(stmt)
            elif isinstance(stmt, ForLoop):
                self.loop(stmt)
            else:
                raise ValidationError(f"unsupported statement {type(stmt).__name__}", getattr(stmt, 'loc', None))

    def loop(self, stmt: ForLoop):
        for bound in (stmt.start, stmt.stop):
            bound_type, bound_random = self.expr(bound)
            if bound_type is not ValueType.INT or bound_random:
                raise ValidationError("loop bounds must be compile-time integers", bound.loc)
        if self.lookup(stmt.var) is not None:
            raise ValidationError(f"loop variable '{stmt.var}' shadows an existing name", stmt.loc)
        # Re-walk the body until loop-carried randomness stops spreading
        for _ in range(_MAX_TAINT_ROUNDS):
            self.changed = False
            self.scopes.append({stmt.var: _Symbol(ValueType.INT, 'index')})
            try:
                self.block(stmt.body)
            finally:
                self.scopes.pop()
            if not self.changed:
                break

    def assign(self, stmt: Assign):
        value_type, random = self.expr(stmt.value)
        if stmt.decl is not None and stmt.decl.is_array:
            raise ValidationError("array variables can only be created by a draw", stmt.loc)
        existing = self.lookup(stmt.target)
        if stmt.decl is not None:
            if existing is not None and stmt.target in self.scopes[-1]:
                raise ValidationError(f"'{stmt.target}' is already declared in this scope", stmt.loc)
            if existing is not None and existing.kind in ('param', 'index'):
                raise ValidationError(f"'{stmt.target}' shadows a {self._kind_name(existing)}", stmt.loc)
            _check_assignable(stmt.decl.base, value_type, stmt.target, stmt.loc)
            self.define(stmt.target, _Symbol(stmt.decl.base, 'var', random=random))
            return
        if existing is None:
            self.define(stmt.target, _Symbol(value_type, 'var', random=random))
            return
        if existing.kind != 'var' or existing.is_array:
            raise ValidationError(f"cannot assign to {self._kind_name(existing)} '{stmt.target}'", stmt.loc)
        _check_assignable(existing.type, value_type, stmt.target, stmt.loc)
        self.mark_random(stmt.target, existing, random)

    def sample(self, stmt: Sample):
        result_type, shape = self.distribution(stmt.dist)
        if stmt.decl is not None:
            if stmt.decl.base is not result_type and not (
                    stmt.decl.base is ValueType.REAL and result_type is ValueType.INT):
                raise ValidationError(
                    f"{stmt.dist.family.value} draw has type {result_type.value}, declared {stmt.decl.base.value}",
                    stmt.loc,
                )
            if stmt.decl.is_array != (shape is not None):
                raise ValidationError("declared shape does not match the draw", stmt.loc)
            result_type = stmt.decl.base
        existing = self.lookup(stmt.target)
        if existing is None or (stmt.decl is not None and stmt.target not in self.scopes[-1]
                                and existing.kind == 'var'):
            kind = 'draw' if shape is not None else 'var'
            self.define(stmt.target, _Symbol(result_type, kind, shape, random=True))
            return
        if stmt.decl is not None and stmt.target in self.scopes[-1]:
            raise ValidationError(f"'{stmt.target}' is already declared in this scope", stmt.loc)
        if existing.kind != 'var' or shape is not None:
            raise ValidationError(f"cannot re-assign {self._kind_name(existing)} '{stmt.target}'", stmt.loc)
        _check_assignable(existing.type, result_type, stmt.target, stmt.loc)
        self.mark_random(stmt.target, existing, True)

    def distribution(self, dist: DistributionSpec):
        """Returns (element type, vector shape or None)"""
        family = dist.family
        if family is Family.GAUSSIAN:
            mean, cov = dist.params
            mean_shape = self.param_shape(mean, dist)
            cov_shape = self.param_shape(cov, dist)
            if mean_shape is None and cov_shape is None:
                return ValueType.REAL, None
            if mean_shape is None or cov_shape is None or len(mean_shape) != 1 or len(cov_shape) != 2:
                raise ValidationError(
                    "Gaussian takes (mean, variance) scalars or (mean vector, covariance matrix)", dist.loc
                )
            n = mean_shape[0]
            if cov_shape != (n, n):
                raise ValidationError(
                    f"covariance shape {cov_shape} does not match mean length {n}", dist.loc
                )
            return ValueType.REAL, (n,)
        for param in dist.params:
            if self.param_shape(param, dist) is not None:
                raise ValidationError(f"{family.value} parameters must be scalars", param.loc)
        if family is Family.BERNOULLI:
            return ValueType.INT, None
        return ValueType.REAL, None

    def param_shape(self, expr: Expr, dist: DistributionSpec):
        """Shape of a distribution parameter; bare array names pass whole arrays"""
        if isinstance(expr, Name):
            symbol = self.lookup(expr.ident)
            if symbol is None:
                raise ValidationError(f"'{expr.ident}' is used before it is defined", expr.loc)
            if symbol.is_array:
                if symbol.random:
                    raise ValidationError(
                        f"distribution parameters must be deterministic: '{expr.ident}' is a random draw", expr.loc
                    )
                if symbol.type is ValueType.BOOL:
                    raise ValidationError(f"'{expr.ident}' is a boolean array", expr.loc)
                return symbol.shape
        value_type, random = self.expr(expr)
        if random:
            raise ValidationError(
                f"distribution parameters must be deterministic: {dist.family.value} parameter depends on a random draw",
                expr.loc,
            )
        if not value_type.is_numeric:
            raise ValidationError(f"{dist.family.value} parameters must be numeric", expr.loc)
        return None

    # -- expressions --------------------------------------------------------

    def expr(self, expr: Expr):
        """Returns (type, random-dependent)"""
        if isinstance(expr, Literal):
            return expr.type, False
        if isinstance(expr, Name):
            symbol = self.lookup(expr.ident)
            if symbol is None:
                raise ValidationError(f"'{expr.ident}' is used before it is defined", expr.loc)
            if symbol.is_array:
                raise ValidationError(f"array '{expr.ident}' must be indexed", expr.loc)
            return symbol.type, symbol.random
        if isinstance(expr, Index):
            symbol = self.lookup(expr.target)
            if symbol is None:
                raise ValidationError(f"'{expr.target}' is used before it is defined", expr.loc)
            if not symbol.is_array:
                raise ValidationError(f"'{expr.target}' is not an array", expr.loc)
            if len(expr.indices) != len(symbol.shape):
                raise ValidationError(
                    f"'{expr.target}' has rank {len(symbol.shape)} but is indexed with {len(expr.indices)} index(es)",
                    expr.loc,
                )
            for index in expr.indices:
                index_type, index_random = self.expr(index)
                if index_type is not ValueType.INT or index_random:
                    raise ValidationError("array indices must be deterministic integers", index.loc)
            return symbol.type, symbol.random
        if isinstance(expr, GetLength):
            symbol = self.lookup(expr.target)
            if symbol is None or not symbol.is_array:
                raise ValidationError(f"GetLength needs an array, '{expr.target}' is not one", expr.loc)
            if not isinstance(expr.dim, Literal) or expr.dim.type is not ValueType.INT:
                raise ValidationError("GetLength takes a literal dimension index", expr.loc)
            if not 0 <= expr.dim.value < len(symbol.shape):
                raise ValidationError(
                    f"'{expr.target}' has no dimension {expr.dim.value}", expr.loc
                )
            return ValueType.INT, False
        if isinstance(expr, Unary):
            operand_type, random = self.expr(expr.operand)
            try:
                return unary_result_type(expr.op, operand_type), random
            except OperatorTypeError as e:
                raise ValidationError(str(e), expr.loc)
        if isinstance(expr, Binary):
            left_type, left_random = self.expr(expr.left)
            right_type, right_random = self.expr(expr.right)
            try:
                return binary_result_type(expr.op, left_type, right_type), left_random or right_random
            except OperatorTypeError as e:
                raise ValidationError(str(e), expr.loc)
        raise ValidationError(f"unsupported expression {type(expr).__name__}", getattr(expr, 'loc', None))

    @staticmethod
    def _kind_name(symbol: _Symbol) -> str:
        return {'param': 'parameter', 'index': 'loop variable', 'draw': 'array draw'}.get(symbol.kind, 'variable')


def _check_assignable(target: ValueType, value: ValueType, name: str, loc):
    if target is value or (target is ValueType.REAL and value is ValueType.INT):
        return
    raise ValidationError(f"cannot assign {value.value} to '{name}' of type {target.value}", loc)


# ---------------------------------------------------------------------------
# Loop-bound folding
# ---------------------------------------------------------------------------

def _fold_loop_bounds(program: ProgramAst, schema: Mapping[str, ParamShape]) -> Tuple[LoopInfo, ...]:
    loops = iter_loops(program.body)
    ids = {id(loop): n for n, loop in enumerate(loops)}
    visits: Dict[int, List[Tuple[int, int]]] = {n: [] for n in range(len(loops))}
    shapes = dict(_draw_shapes(program, schema))
    shapes.update({name: s.shape for name, s in schema.items() if s.is_array})

    def walk(body, indices: Dict[str, int]):
        for stmt in body:
            if not isinstance(stmt, ForLoop):
                continue
            start = static_int(stmt.start, indices, shapes)
            stop = static_int(stmt.stop, indices, shapes) + (1 if stmt.inclusive else 0)
            visits[ids[id(stmt)]].append((start, stop))
            if any(isinstance(s, ForLoop) for s in stmt.body):
                for value in range(start, stop):
                    walk(stmt.body, {**indices, stmt.var: value})

    walk(program.body, {})
    return tuple(
        LoopInfo(n, loop.var, loop.loc, tuple(visits[n])) for n, loop in enumerate(loops)
    )


def _draw_shapes(program: ProgramAst, schema: Mapping[str, ParamShape]):
    """Shapes of vector draws, for GetLength on a drawn array"""
    for stmt in _all_samples(program.body):
        mean = stmt.dist.params[0]
        if stmt.dist.family is Family.GAUSSIAN and isinstance(mean, Name):
            shape = schema.get(mean.ident)
            if shape is not None and shape.is_array:
                yield stmt.target, shape.shape


def _all_samples(body):
    for stmt in body:
        if isinstance(stmt, Sample):
            yield stmt
        elif isinstance(stmt, ForLoop):
            yield from _all_samples(stmt.body)


def static_int(expr: Expr, indices: Mapping[str, int], shapes: Mapping[str, Tuple[int, ...]]) -> int:
    """
    Fold a compile-time integer expression.

    Only integer literals, enclosing loop indices and GetLength queries are
    compile-time; anything else (including runtime parameters) is rejected.
    """
    if isinstance(expr, Literal):
        if expr.type is not ValueType.INT:
            raise ValidationError("loop bounds and indices must be integers", expr.loc)
        return int(expr.value)
    if isinstance(expr, Name):
        if expr.ident in indices:
            return indices[expr.ident]
        raise ValidationError(
            f"'{expr.ident}' is not a compile-time constant: loop bounds may only use literals, "
            f"enclosing loop indices and GetLength",
            expr.loc,
        )
    if isinstance(expr, GetLength):
        shape = shapes.get(expr.target)
        if shape is None:
            raise ValidationError(f"dimensions of '{expr.target}' are unknown at compile time", expr.loc)
        return int(shape[int(expr.dim.value)])
    if isinstance(expr, Unary) and expr.op == 'neg':
        return -static_int(expr.operand, indices, shapes)
    if isinstance(expr, Binary) and expr.op in ('add', 'sub', 'mul', 'div', 'mod'):
        left = static_int(expr.left, indices, shapes)
        right = static_int(expr.right, indices, shapes)
        if expr.op == 'add':
            return left + right
        if expr.op == 'sub':
            return left - right
        if expr.op == 'mul':
            return left * right
        if right == 0:
            raise ValidationError("division by zero in a compile-time expression", expr.loc)
        quotient = abs(left) // abs(right)
        if expr.op == 'div':
            return quotient if (left >= 0) == (right >= 0) else -quotient
        return left - right * (quotient if (left >= 0) == (right >= 0) else -quotient)
    raise ValidationError("expression is not a compile-time integer", getattr(expr, 'loc', None))
