"""
Operator table shared by every evaluator.

The static folder, the unroller's constant folding, the straight-line
interpreter and the vectorized forward sampler all call apply_unary /
apply_binary, so a program means the same thing on every path.
"""

from enum import Enum
from typing import Any

import numpy as np


class ValueType(str, Enum):
    INT = "int"
    REAL = "real"
    BOOL = "bool"

    @property
    def is_numeric(self) -> bool:
        return self is not ValueType.BOOL


# Source spelling -> op name
BINARY_SYMBOLS = {
    '+': 'add', '-': 'sub', '*': 'mul', '/': 'div', '%': 'mod',
    '<': 'lt', '<=': 'le', '>': 'gt', '>=': 'ge', '==': 'eq', '!=': 'ne',
    '&&': 'and', '||': 'or',
}
UNARY_SYMBOLS = {'-': 'neg', '!': 'not'}

OP_SYMBOLS = {name: sym for sym, name in BINARY_SYMBOLS.items()}
OP_SYMBOLS.update({'neg': '-', 'not': '!'})

ARITHMETIC_OPS = frozenset({'add', 'sub', 'mul', 'div', 'mod'})
COMPARISON_OPS = frozenset({'lt', 'le', 'gt', 'ge', 'eq', 'ne'})
LOGICAL_OPS = frozenset({'and', 'or'})

# a op b  <=>  b flip(op) a
FLIPPED_COMPARISON = {'lt': 'gt', 'le': 'ge', 'gt': 'lt', 'ge': 'le', 'eq': 'eq', 'ne': 'ne'}

# Binding strength for the pretty-printer and the parser
PRECEDENCE = {
    'or': 1, 'and': 2,
    'eq': 3, 'ne': 3,
    'lt': 4, 'le': 4, 'gt': 4, 'ge': 4,
    'add': 5, 'sub': 5,
    'mul': 6, 'div': 6, 'mod': 6,
}


class OperatorTypeError(TypeError):
    """Operand types do not fit the operator"""
    pass


def binary_result_type(op: str, left: ValueType, right: ValueType) -> ValueType:
    """Static result type of `left op right`; raises OperatorTypeError on mismatch"""
    if op in ARITHMETIC_OPS:
        if not (left.is_numeric and right.is_numeric):
            raise OperatorTypeError(f"'{OP_SYMBOLS[op]}' needs numeric operands, got {left.value} and {right.value}")
        if left is ValueType.INT and right is ValueType.INT:
            return ValueType.INT
        return ValueType.REAL
    if op in COMPARISON_OPS:
        if left.is_numeric and right.is_numeric:
            return ValueType.BOOL
        if op in ('eq', 'ne') and left is ValueType.BOOL and right is ValueType.BOOL:
            return ValueType.BOOL
        raise OperatorTypeError(f"'{OP_SYMBOLS[op]}' cannot compare {left.value} with {right.value}")
    if op in LOGICAL_OPS:
        if left is ValueType.BOOL and right is ValueType.BOOL:
            return ValueType.BOOL
        raise OperatorTypeError(f"'{OP_SYMBOLS[op]}' needs boolean operands, got {left.value} and {right.value}")
    raise OperatorTypeError(f"unknown operator {op}")


def unary_result_type(op: str, operand: ValueType) -> ValueType:
    if op == 'neg':
        if not operand.is_numeric:
            raise OperatorTypeError(f"unary '-' needs a numeric operand, got {operand.value}")
        return operand
    if op == 'not':
        if operand is not ValueType.BOOL:
            raise OperatorTypeError(f"'!' needs a boolean operand, got {operand.value}")
        return ValueType.BOOL
    raise OperatorTypeError(f"unknown operator {op}")


def apply_unary(op: str, value: Any) -> Any:
    """Evaluate a unary op on a scalar or a numpy vector of samples"""
    if op == 'neg':
        return np.negative(value)
    if op == 'not':
        return np.logical_not(value)
    raise ValueError(f"unknown unary op {op}")


def apply_binary(op: str, left: Any, right: Any, result_type: ValueType = ValueType.REAL) -> Any:
    """
    Evaluate a binary op on scalars or numpy vectors of samples.

    Integer division and modulo truncate toward zero (C semantics); real
    division by zero yields inf/nan instead of raising.
    """
    with np.errstate(all='ignore'):
        if op == 'add':
            return np.add(left, right)
        if op == 'sub':
            return np.subtract(left, right)
        if op == 'mul':
            return np.multiply(left, right)
        if op == 'div':
            quotient = np.true_divide(left, right)
            if result_type is ValueType.INT:
                return np.trunc(quotient)
            return quotient
        if op == 'mod':
            return np.fmod(left, right)
        if op == 'lt':
            return np.less(left, right)
        if op == 'le':
            return np.less_equal(left, right)
        if op == 'gt':
            return np.greater(left, right)
        if op == 'ge':
            return np.greater_equal(left, right)
        if op == 'eq':
            return np.equal(left, right)
        if op == 'ne':
            return np.not_equal(left, right)
        if op == 'and':
            return np.logical_and(left, right)
        if op == 'or':
            return np.logical_or(left, right)
    raise ValueError(f"unknown binary op {op}")


def to_python(value: Any, value_type: ValueType) -> Any:
    """Convert a numpy scalar to the plain Python value of its PSP type"""
    if value_type is ValueType.BOOL:
        return bool(value)
    if value_type is ValueType.INT:
        return int(value)
    return float(value)
