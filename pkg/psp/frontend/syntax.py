"""
Syntax tree for Probabilistic Safety Programs.

Nodes are frozen dataclasses; source locations are kept on every node but
excluded from equality, so two parses of equivalent text compare equal.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

from psp.ops import ValueType

Loc = Tuple[int, int]
NO_LOC: Loc = (0, 0)


def _loc_field():
    return field(default=NO_LOC, compare=False, repr=False)


class Family(str, Enum):
    GAUSSIAN = "Gaussian"
    GAMMA = "Gamma"
    BETA = "Beta"
    BERNOULLI = "Bernoulli"

    @property
    def arity(self) -> int:
        return 1 if self is Family.BERNOULLI else 2

    @property
    def analytic(self) -> bool:
        """Only Gaussian draws admit the closed-form marginal"""
        return self is Family.GAUSSIAN


@dataclass(frozen=True)
class TypeSpec:
    """Scalar type, or an array type when dims is set (None entries are open dimensions)"""
    base: ValueType
    dims: Optional[Tuple[Optional[int], ...]] = None

    @property
    def is_array(self) -> bool:
        return self.dims is not None

    @property
    def rank(self) -> int:
        return len(self.dims) if self.dims is not None else 0


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: Union[int, float, bool]
    type: ValueType
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Name:
    ident: str
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Index:
    """Indexed read `target[i, j]` (also written `target[i][j]`)"""
    target: str
    indices: Tuple['Expr', ...]
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class GetLength:
    """Compile-time dimension query `target.GetLength(k)`"""
    target: str
    dim: 'Expr'
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: 'Expr'
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Binary:
    op: str
    left: 'Expr'
    right: 'Expr'
    loc: Loc = _loc_field()


Expr = Union[Literal, Name, Index, GetLength, Unary, Binary]


@dataclass(frozen=True)
class DistributionSpec:
    """Distribution call `Family(θ̄)`; parameters are deterministic expressions"""
    family: Family
    params: Tuple[Expr, ...]
    loc: Loc = _loc_field()


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    """Deterministic assignment `[type] x = E;`"""
    target: str
    value: Expr
    decl: Optional[TypeSpec] = None
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class Sample:
    """Probabilistic assignment `[type] x ~ Dist(θ̄);` (or `= Dist(θ̄)`)"""
    target: str
    dist: DistributionSpec
    decl: Optional[TypeSpec] = None
    tilde: bool = False
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class ForLoop:
    """Counted loop; iterates var over [start, stop) or [start, stop] when inclusive"""
    var: str
    start: Expr
    stop: Expr
    inclusive: bool
    body: Tuple['Stmt', ...]
    loc: Loc = _loc_field()


Stmt = Union[Assign, Sample, ForLoop]


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeSpec
    loc: Loc = _loc_field()


@dataclass(frozen=True)
class ProgramAst:
    name: str
    return_type: TypeSpec
    params: Tuple[Param, ...]
    body: Tuple[Stmt, ...]
    return_expr: Expr
    loc: Loc = _loc_field()

    def param(self, name: str) -> Optional[Param]:
        for param in self.params:
            if param.name == name:
                return param
        return None


def iter_statements(body):
    """Pre-order walk over statements, descending into loop bodies"""
    for stmt in body:
        yield stmt
        if isinstance(stmt, ForLoop):
            yield from iter_statements(stmt.body)


def iter_loops(body):
    """Loops in pre-order; the position in this sequence is the loop's id"""
    return [stmt for stmt in iter_statements(body) if isinstance(stmt, ForLoop)]
