"""
Affine forms over primitive draws.

A continuous node is represented as constant + sum(coeff * primitive) when
only +, -, negation and scaling by constants lie between it and its draws.
Anything else collapses to NON_AFFINE.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from psp.frontend.syntax import Family


@dataclass(frozen=True)
class AffineForm:
    constant: float
    coeffs: Tuple[Tuple[int, float], ...] = ()

    @classmethod
    def of(cls, constant: float, coeffs: Optional[Mapping[int, float]] = None) -> 'AffineForm':
        items = tuple(sorted((int(k), float(v)) for k, v in (coeffs or {}).items() if v != 0.0))
        return cls(float(constant), items)

    @classmethod
    def primitive(cls, node: int) -> 'AffineForm':
        return cls(0.0, ((node, 1.0),))

    @property
    def coeff_map(self) -> Dict[int, float]:
        return dict(self.coeffs)

    @property
    def support(self) -> frozenset:
        return frozenset(k for k, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other: 'AffineForm') -> 'AffineForm':
        merged = self.coeff_map
        for k, v in other.coeffs:
            merged[k] = merged.get(k, 0.0) + v
        return AffineForm.of(self.constant + other.constant, merged)

    def __neg__(self) -> 'AffineForm':
        return AffineForm.of(-self.constant, {k: -v for k, v in self.coeffs})

    def __sub__(self, other: 'AffineForm') -> 'AffineForm':
        return self + (-other)

    def scale(self, factor: float) -> 'AffineForm':
        return AffineForm.of(self.constant * factor, {k: v * factor for k, v in self.coeffs})

    def shift(self, amount: float) -> 'AffineForm':
        return AffineForm(self.constant + float(amount), self.coeffs)

    def evaluate(self, values: Mapping[int, np.ndarray]):
        total = self.constant
        for k, v in self.coeffs:
            total = total + v * values[k]
        return total

    def __str__(self):
        terms = [f"{self.constant:g}"] + [f"{v:+g}*v{k}" for k, v in self.coeffs]
        return ' '.join(terms)


class _NonAffine:
    """Marker for continuous nodes outside the affine fragment"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return 'NON_AFFINE'

    def __reduce__(self):
        return (_NonAffine, ())


NON_AFFINE = _NonAffine()

Form = Union[AffineForm, _NonAffine]
Operand = Union[Form, float]


def combine(op: str, left: Operand, right: Operand) -> Form:
    """
    Form of `left op right` where each side is a form or a plain constant.

    At least one side is a form (random-dependent).
    """
    if left is NON_AFFINE or right is NON_AFFINE:
        return NON_AFFINE
    left_const = not isinstance(left, AffineForm)
    right_const = not isinstance(right, AffineForm)
    if op == 'add':
        if left_const:
            return right.shift(left)
        if right_const:
            return left.shift(right)
        return left + right
    if op == 'sub':
        if left_const:
            return (-right).shift(left)
        if right_const:
            return left.shift(-right)
        return left - right
    if op == 'mul':
        if left_const:
            return right.scale(left)
        if right_const:
            return left.scale(right)
        return NON_AFFINE
    if op == 'div':
        if right_const and right != 0 and np.isfinite(right):
            return left.scale(1.0 / right)
        return NON_AFFINE
    return NON_AFFINE


def negate(form: Form) -> Form:
    return NON_AFFINE if form is NON_AFFINE else -form


@dataclass
class PrimitiveFamily:
    """
    Joint law of the scalar primitives.

    Gaussian primitives carry their means and the block-diagonal covariance
    (blocks come from multivariate draws); other families are recorded by
    name only.
    """
    families: Dict[int, Family] = field(default_factory=dict)
    params: Dict[int, Tuple[float, ...]] = field(default_factory=dict)
    means: Dict[int, float] = field(default_factory=dict)
    # primitive id -> (block id, position in block)
    blocks: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    block_cov: Dict[int, np.ndarray] = field(default_factory=dict)

    def add_draw(self, block: int, dests: Tuple[int, ...], family: Family,
                 params: Tuple[float, ...], mean: np.ndarray, cov: np.ndarray):
        for position, dest in enumerate(dests):
            self.families[dest] = family
            self.params[dest] = params
            self.blocks[dest] = (block, position)
            if family is Family.GAUSSIAN:
                self.means[dest] = float(mean[position])
        if family is Family.GAUSSIAN:
            self.block_cov[block] = cov

    def is_gaussian(self, primitives: Iterable[int]) -> bool:
        return all(self.families.get(p) is Family.GAUSSIAN for p in primitives)

    def covariance(self, a: int, b: int) -> float:
        block_a, pos_a = self.blocks[a]
        block_b, pos_b = self.blocks[b]
        if block_a != block_b:
            return 0.0
        return float(self.block_cov[block_a][pos_a, pos_b])

    def covariance_matrix(self, primitives: Sequence[int]) -> np.ndarray:
        """Joint covariance of Gaussian primitives, in the given order"""
        cov = np.zeros((len(primitives), len(primitives)))
        members: Dict[int, List[Tuple[int, int]]] = {}
        for i, p in enumerate(primitives):
            block, position = self.blocks[p]
            members.setdefault(block, []).append((i, position))
        for block, items in members.items():
            rows = [i for i, _ in items]
            positions = [q for _, q in items]
            cov[np.ix_(rows, rows)] = self.block_cov[block][np.ix_(positions, positions)]
        return cov

    def moments(self, form: AffineForm) -> Tuple[float, float]:
        """Mean and variance of a Gaussian affine form"""
        mean = form.constant + sum(v * self.means[k] for k, v in form.coeffs)
        return float(mean), self.cross(form, form)

    def cross(self, f: AffineForm, g: AffineForm) -> float:
        """Covariance of two Gaussian affine forms (a^T Sigma b)"""
        total = 0.0
        g_items = g.coeffs
        for a, va in f.coeffs:
            for b, vb in g_items:
                total += va * vb * self.covariance(a, b)
        return float(max(total, 0.0)) if f is g else float(total)
