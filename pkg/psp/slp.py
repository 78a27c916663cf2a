"""
Straight-line programs: the fully unrolled, single-assignment form.

Every instruction defines one variable id (a multivariate draw defines one
id per component). Ids are assigned in program order, so operands always
precede their use.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np

from psp.frontend.syntax import Family
from psp.ops import OP_SYMBOLS, ValueType, apply_binary, apply_unary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstLoad:
    dest: int
    value: Union[int, float, bool]
    type: ValueType


@dataclass(frozen=True)
class InputLoad:
    """Read of one bound input element; index is () for scalars"""
    dest: int
    name: str
    index: Tuple[int, ...]
    value: Union[int, float, bool]
    type: ValueType


@dataclass(frozen=True)
class Draw:
    """
    Primitive random draw with fully evaluated parameters.

    Scalar families carry params as a tuple of floats. A vector Gaussian
    carries params = (mean tuple,) and the covariance as nested tuples;
    dests then holds one id per component.
    """
    dests: Tuple[int, ...]
    family: Family
    params: Tuple[Any, ...]
    cov: Optional[Tuple[Tuple[float, ...], ...]] = None
    type: ValueType = ValueType.REAL

    @property
    def dest(self) -> int:
        return self.dests[0]

    @property
    def is_vector(self) -> bool:
        return self.cov is not None

    def mean_vector(self) -> np.ndarray:
        if self.is_vector:
            return np.asarray(self.params[0], dtype=float)
        return np.asarray([self.params[0]], dtype=float)

    def cov_matrix(self) -> np.ndarray:
        if self.is_vector:
            return np.asarray(self.cov, dtype=float)
        return np.asarray([[self.params[1]]], dtype=float)


@dataclass(frozen=True)
class Unary:
    dest: int
    op: str
    arg: int
    type: ValueType


@dataclass(frozen=True)
class Binary:
    dest: int
    op: str
    left: int
    right: int
    type: ValueType


Instruction = Union[ConstLoad, InputLoad, Draw, Unary, Binary]


def defined_ids(instr: Instruction) -> Tuple[int, ...]:
    return instr.dests if isinstance(instr, Draw) else (instr.dest,)


def operand_ids(instr: Instruction) -> Tuple[int, ...]:
    if isinstance(instr, Unary):
        return (instr.arg,)
    if isinstance(instr, Binary):
        return (instr.left, instr.right)
    return ()


@dataclass(frozen=True)
class StraightLineProgram:
    name: str
    instructions: Tuple[Instruction, ...]
    output: int

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def definitions(self) -> Dict[int, Instruction]:
        """Variable id -> defining instruction"""
        result = {}
        for instr in self.instructions:
            for dest in defined_ids(instr):
                result[dest] = instr
        return result

    def types(self) -> Dict[int, ValueType]:
        return {dest: instr.type for dest, instr in self.definitions().items()}

    def draws(self) -> List[Draw]:
        return [instr for instr in self.instructions if isinstance(instr, Draw)]

    def count(self, kind) -> int:
        return sum(1 for instr in self.instructions if isinstance(instr, kind))


def check_single_assignment(slp: StraightLineProgram):
    """Raise ValueError unless every id is defined once, before any use"""
    seen = set()
    for instr in slp.instructions:
        for operand in operand_ids(instr):
            if operand not in seen:
                raise ValueError(f"v{operand} used before definition")
        for dest in defined_ids(instr):
            if dest in seen:
                raise ValueError(f"v{dest} assigned twice")
            seen.add(dest)
    if slp.output not in seen:
        raise ValueError(f"output v{slp.output} is never defined")


# ---------------------------------------------------------------------------
# Text dump
# ---------------------------------------------------------------------------

def _fmt_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_instruction(instr: Instruction) -> str:
    if isinstance(instr, ConstLoad):
        rhs = f"const {_fmt_value(instr.value)}"
    elif isinstance(instr, InputLoad):
        index = f"[{', '.join(str(i) for i in instr.index)}]" if instr.index else ''
        rhs = f"input {instr.name}{index} = {_fmt_value(instr.value)}"
    elif isinstance(instr, Draw):
        lhs = ', '.join(f"v{d}" for d in instr.dests)
        if instr.is_vector:
            args = f"{list(instr.params[0])}, {[list(row) for row in instr.cov]}"
        else:
            args = ', '.join(_fmt_value(p) for p in instr.params)
        return f"{lhs} = draw {instr.family.value}({args}) : {instr.type.value}"
    elif isinstance(instr, Unary):
        rhs = f"{instr.op} v{instr.arg}"
    elif isinstance(instr, Binary):
        rhs = f"{instr.op} v{instr.left}, v{instr.right}"
    else:
        raise TypeError(f"unknown instruction {instr!r}")
    return f"v{instr.dest} = {rhs} : {instr.type.value}"


def dump(slp: StraightLineProgram) -> str:
    """Line-numbered listing, one instruction per line"""
    lines = [f"# {slp.name}: {len(slp)} instructions, output v{slp.output}"]
    for n, instr in enumerate(slp.instructions):
        lines.append(f"{n:5d}  {format_instruction(instr)}")
    return '\n'.join(lines) + '\n'


# ---------------------------------------------------------------------------
# Sampling and interpretation
# ---------------------------------------------------------------------------

def sample_draw(draw: Draw, rng: np.random.Generator, n: int) -> Dict[int, np.ndarray]:
    """n independent samples of one Draw, keyed by component id"""
    family = draw.family
    if family is Family.GAUSSIAN:
        if draw.is_vector:
            values = rng.multivariate_normal(draw.mean_vector(), draw.cov_matrix(), size=n, method='eigh')
            return {dest: values[:, k] for k, dest in enumerate(draw.dests)}
        mean, variance = draw.params
        return {draw.dest: rng.normal(mean, np.sqrt(variance), size=n)}
    if family is Family.GAMMA:
        shape, scale = draw.params
        return {draw.dest: rng.gamma(shape, scale, size=n)}
    if family is Family.BETA:
        a, b = draw.params
        return {draw.dest: rng.beta(a, b, size=n)}
    if family is Family.BERNOULLI:
        (p,) = draw.params
        return {draw.dest: (rng.random(n) < p).astype(np.int64)}
    raise ValueError(f"unknown family {family}")


def sample_draws(slp: StraightLineProgram, rng: np.random.Generator, n: int) -> Dict[int, np.ndarray]:
    """Samples for every Draw in program order"""
    values: Dict[int, np.ndarray] = {}
    for draw in slp.draws():
        values.update(sample_draw(draw, rng, n))
    return values


def simulate(slp: StraightLineProgram, draws: Mapping[int, Any], n: Optional[int] = None) -> np.ndarray:
    """
    Run the program on given primitive draw values.

    Args:
        slp: program to interpret
        draws: draw component id -> scalar or vector of samples
        n: number of samples (inferred from the draws when omitted)

    Returns:
        output values as an array of length n (or a 0-d array for n == 0 draws)
    """
    values: Dict[int, Any] = {}
    for instr in slp.instructions:
        if isinstance(instr, (ConstLoad, InputLoad)):
            values[instr.dest] = instr.value
        elif isinstance(instr, Draw):
            for dest in instr.dests:
                values[dest] = draws[dest]
        elif isinstance(instr, Unary):
            values[instr.dest] = apply_unary(instr.op, values[instr.arg])
        else:
            values[instr.dest] = apply_binary(instr.op, values[instr.left], values[instr.right], instr.type)

    result = np.asarray(values[slp.output])
    if n is None:
        sizes = [np.size(v) for v in draws.values()]
        n = max(sizes) if sizes else None
    if n is not None and result.ndim == 0:
        result = np.broadcast_to(result, (n,))
    return result
