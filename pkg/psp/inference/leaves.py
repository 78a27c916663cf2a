"""
Bernoulli leaves: each comparator (or merged pair of comparators) of the
graphical model is replaced by the probability that it holds, with its
continuous ancestry integrated out.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from psp.compiler import NON_AFFINE, AffineForm, ComparatorSpec, GraphicalModel, NodeKind
from psp.config import config
from psp.errors import InferenceError
from psp.frontend.syntax import Family
from psp.inference.gaussian import normal_cdf, prob_compare, wilson_lower
from psp.ops import apply_binary

logger = logging.getLogger(__name__)

MIN_MC_SAMPLES = 100

# Enumerating more independent Bernoulli primitives than this goes to sampling
_MAX_DISCRETE_PRIMITIVES = 12


class LeafMethod(str, Enum):
    ANALYTIC_GAUSSIAN = "AnalyticGaussian"
    ANALYTIC_INTERVAL = "AnalyticInterval"
    EXACT_DISCRETE = "ExactDiscrete"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class BernoulliLeaf:
    """
    Probability that one boolean node of the model is true.

    node is the comparator (or, for merged intervals, the and/or node that
    combines two comparators); covers lists every comparator it replaces.
    """
    node: int
    p_true: float
    method: LeafMethod
    covers: Tuple[int, ...]
    primitives: frozenset = field(default_factory=frozenset)
    shares_ancestry_with: frozenset = field(default_factory=frozenset)
    # Gaussian one-sided leaves: sign +1 for form >(=) t, -1 for form <(=) t
    form: Optional[AffineForm] = None
    sign: int = 0
    # Monte Carlo bookkeeping
    n: Optional[int] = None
    seed: Optional[int] = None
    p_point: Optional[float] = None
    lower_bound: bool = False

    @property
    def one_sided(self) -> bool:
        return self.sign != 0

    def with_shared(self, others: frozenset) -> 'BernoulliLeaf':
        return BernoulliLeaf(
            self.node, self.p_true, self.method, self.covers, self.primitives, others,
            self.form, self.sign, self.n, self.seed, self.p_point, self.lower_bound,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'node': self.node,
            'p_true': self.p_true,
            'method': self.method.value,
            'covers': list(self.covers),
            'shares_ancestry_with': sorted(self.shares_ancestry_with),
        }
        if self.method is LeafMethod.MONTE_CARLO:
            data.update({'n': self.n, 'seed': self.seed, 'p_point': self.p_point,
                         'lower_bound': self.lower_bound})
        return data


def _sign(op: str) -> int:
    if op in ('gt', 'ge'):
        return 1
    if op in ('lt', 'le'):
        return -1
    return 0


def leaf_rng(seed: int, node: int) -> np.random.Generator:
    """Per-leaf stream; independent of evaluation order and worker count"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(node,)))


def marginalize_leaf(node: int, gm: GraphicalModel) -> BernoulliLeaf:
    """
    Closed-form probability of a comparator over Gaussian primitives.

    Falls through to exact enumeration when the comparator depends only on
    Bernoulli primitives.

    Raises:
        InferenceError: comparator needs the sampling path
    """
    spec: ComparatorSpec = gm.comparators[node]
    primitives = gm.primitive_ancestors(node)
    if spec.needs_sampling:
        raise InferenceError(f"comparator v{node} is not affine; use the sampling path")
    form = spec.form
    if gm.family.is_gaussian(form.support):
        mean, variance = gm.family.moments(form)
        p = prob_compare(mean, variance, spec.op, spec.threshold)
        return BernoulliLeaf(node, p, LeafMethod.ANALYTIC_GAUSSIAN, (node,), primitives,
                             form=form, sign=_sign(spec.op))
    if _is_discrete(form, gm):
        return BernoulliLeaf(node, _enumerate_discrete(form, spec, gm), LeafMethod.EXACT_DISCRETE,
                             (node,), primitives)
    raise InferenceError(f"comparator v{node} depends on non-Gaussian draws; use the sampling path")


def _is_discrete(form: AffineForm, gm: GraphicalModel) -> bool:
    support = form.support
    return (0 < len(support) <= _MAX_DISCRETE_PRIMITIVES
            and all(gm.family.families.get(p) is Family.BERNOULLI for p in support))


def _enumerate_discrete(form: AffineForm, spec: ComparatorSpec, gm: GraphicalModel) -> float:
    """Exact Pr over the outcomes of independent Bernoulli primitives"""
    support = sorted(form.support)
    probs = [gm.family.params[p][0] for p in support]
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=len(support)):
        weight = 1.0
        for bit, p in zip(outcome, probs):
            weight *= p if bit else 1.0 - p
        if weight == 0.0:
            continue
        value = form.evaluate(dict(zip(support, outcome)))
        if bool(apply_binary(spec.op, value, spec.threshold)):
            total += weight
    return min(1.0, max(0.0, total))


def marginalize_leaf_mc(node: int, gm: GraphicalModel, n: int, seed: int,
                        lower_bound: bool = False,
                        confidence: Optional[float] = None) -> BernoulliLeaf:
    """
    Empirical probability of a boolean node from n ancestral samples.

    Args:
        node: comparator (or any boolean node) to estimate
        n: sample count, at least 100
        seed: root seed; the stream is split per node id
        lower_bound: report a one-sided Wilson lower bound instead of the
                     point estimate
        confidence: level for the lower bound (default PSP_MC_CONFIDENCE)

    Raises:
        InferenceError: n < 100
    """
    if n < MIN_MC_SAMPLES:
        raise InferenceError(f"Monte Carlo leaves need at least {MIN_MC_SAMPLES} samples, got {n}")
    primitives = gm.primitive_ancestors(node)
    rng = leaf_rng(seed, node)
    values = gm.sample_primitives(rng, n, only=primitives)
    outcome = np.broadcast_to(np.asarray(gm.evaluate(values, [node])[node], dtype=bool), (n,))
    successes = int(np.count_nonzero(outcome))
    p_point = successes / n
    p = p_point
    if lower_bound:
        p = wilson_lower(successes, n, confidence if confidence is not None else config.PSP_MC_CONFIDENCE)
    logger.debug(f"MC leaf v{node}: {successes}/{n} true, reported {p:.6f}")
    return BernoulliLeaf(node, p, LeafMethod.MONTE_CARLO, (node,), primitives,
                         n=n, seed=seed, p_point=p_point, lower_bound=lower_bound)


# ---------------------------------------------------------------------------
# Interval pattern
# ---------------------------------------------------------------------------

def _half_line(op: str, t: float):
    """(low, low_closed, high, high_closed) of {x : x op t}"""
    inf = float('inf')
    if op == 'gt':
        return (t, False, inf, False)
    if op == 'ge':
        return (t, True, inf, False)
    if op == 'lt':
        return (-inf, False, t, False)
    return (-inf, False, t, True)


def _intersect(a, b):
    lo, lo_closed = max((a[0], a[1]), (b[0], b[1]), key=lambda x: (x[0], not x[1]))
    hi, hi_closed = min((a[2], a[3]), (b[2], b[3]), key=lambda x: (x[0], x[1]))
    return (lo, lo_closed, hi, hi_closed)


def _interval_prob(interval, mean: float, variance: float) -> float:
    lo, lo_closed, hi, hi_closed = interval
    if lo > hi or (lo == hi and not (lo_closed and hi_closed)):
        return 0.0
    if variance <= 0.0:
        above = mean > lo or (lo_closed and mean == lo)
        below = mean < hi or (hi_closed and mean == hi)
        return 1.0 if above and below else 0.0
    sd = np.sqrt(variance)
    upper = 1.0 if hi == float('inf') else normal_cdf((hi - mean) / sd)
    lower = 0.0 if lo == -float('inf') else normal_cdf((lo - mean) / sd)
    return max(0.0, upper - lower)


def find_interval_pairs(gm: GraphicalModel) -> Dict[int, Tuple[int, int]]:
    """
    and/or nodes whose two parents are one-sided comparators on the same
    Gaussian affine form, each feeding only that node.
    """
    pairs = {}
    for n in gm.of_kind(NodeKind.BOOLEAN_OP):
        node = gm.nodes[n]
        if node.op not in ('and', 'or') or len(node.parents) != 2:
            continue
        a, b = node.parents
        if not all(gm.nodes[p].kind is NodeKind.COMPARATOR for p in (a, b)):
            continue
        if gm.graph.out_degree(a) != 1 or gm.graph.out_degree(b) != 1:
            continue
        spec_a, spec_b = gm.comparators[a], gm.comparators[b]
        if spec_a.form is NON_AFFINE or spec_a.form != spec_b.form:
            continue
        if not (_sign(spec_a.op) and _sign(spec_b.op)):
            continue
        if not gm.family.is_gaussian(spec_a.form.support):
            continue
        pairs[n] = (a, b)
    return pairs


def interval_leaf(node: int, pair: Tuple[int, int], gm: GraphicalModel) -> BernoulliLeaf:
    """Exact probability of `c1 && c2` / `c1 || c2` over one shared Gaussian form"""
    a, b = pair
    spec_a, spec_b = gm.comparators[a], gm.comparators[b]
    mean, variance = gm.family.moments(spec_a.form)
    half_a = _half_line(spec_a.op, spec_a.threshold)
    half_b = _half_line(spec_b.op, spec_b.threshold)
    both = _interval_prob(_intersect(half_a, half_b), mean, variance)
    if gm.nodes[node].op == 'and':
        p = both
    else:
        p_a = prob_compare(mean, variance, spec_a.op, spec_a.threshold)
        p_b = prob_compare(mean, variance, spec_b.op, spec_b.threshold)
        p = p_a + p_b - both
    p = min(1.0, max(0.0, p))
    return BernoulliLeaf(node, p, LeafMethod.ANALYTIC_INTERVAL, (a, b), gm.primitive_ancestors(node))


# ---------------------------------------------------------------------------
# All leaves of a model
# ---------------------------------------------------------------------------

def build_leaves(gm: GraphicalModel, seed: int, mc_samples: int,
                 lower_bounds: bool) -> List[BernoulliLeaf]:
    """
    One leaf per comparator, with interval pairs merged, plus the shared
    ancestry relation between them: two leaves share ancestry when they
    depend on the same draw, even through different components of it.

    Args:
        seed: root seed for Monte Carlo leaves
        mc_samples: samples per Monte Carlo leaf
        lower_bounds: Monte Carlo leaves report Wilson lower bounds
    """
    leaves: List[BernoulliLeaf] = []
    covered = set()
    for n, pair in find_interval_pairs(gm).items():
        leaves.append(interval_leaf(n, pair, gm))
        covered.update(pair)

    for n in gm.of_kind(NodeKind.COMPARATOR):
        if n in covered:
            continue
        try:
            leaves.append(marginalize_leaf(n, gm))
        except InferenceError as e:
            logger.debug(f"{e}; sampling v{n}")
            leaves.append(marginalize_leaf_mc(n, gm, mc_samples, seed, lower_bound=lower_bounds))

    blocks = {leaf.node: gm.primitive_blocks(leaf.node) for leaf in leaves}
    by_block: Dict[int, set] = {}
    for node, draws in blocks.items():
        for block in draws:
            by_block.setdefault(block, set()).add(node)
    leaves = [
        leaf.with_shared(frozenset().union(*(by_block[b] for b in blocks[leaf.node])) - {leaf.node})
        for leaf in leaves
    ]
    leaves.sort(key=lambda leaf: leaf.node)
    return leaves
