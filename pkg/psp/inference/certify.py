"""
Lower-bound certificate for the factorized answer.

The product of leaf probabilities under-estimates the true probability
when every group of correlated leaves is combined only through AND gates
on negation-free paths, and the leaves' Gaussian statistics are pairwise
non-negatively correlated (such Gaussian vectors are associated, so their
increasing events are positively correlated). Leaves that share no
draw are independent and need nothing.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from psp.compiler import GraphicalModel
from psp.inference.boolean import BooleanNetwork
from psp.inference.leaves import BernoulliLeaf, LeafMethod

logger = logging.getLogger(__name__)

# Correlations this close to zero count as zero
_CORR_TOL = 1e-12


@dataclass
class Certificate:
    certified: bool
    reasons: List[str] = field(default_factory=list)
    pairs_checked: int = 0
    min_correlation: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'certified': self.certified,
            'reasons': list(self.reasons),
            'pairs_checked': self.pairs_checked,
            'min_correlation': self.min_correlation,
        }


def certify_lower_bound(gm: GraphicalModel, leaves: Sequence[BernoulliLeaf],
                        network: BooleanNetwork) -> Certificate:
    """
    Decide whether the factorized probability is a guaranteed lower bound.

    Returns:
        Certificate; certified is False with one reason per failed condition
    """
    reasons: List[str] = []
    by_node = {leaf.node: leaf for leaf in leaves if leaf.node in network.graph}
    shared = [leaf for leaf in by_node.values() if leaf.shares_ancestry_with]
    sampled = [leaf for leaf in by_node.values() if leaf.method is LeafMethod.MONTE_CARLO]

    # Leaves whose error must propagate monotonically to the output
    needs_monotone = {leaf.node for leaf in shared} | {leaf.node for leaf in sampled}
    negating = network.negating_gates() if needs_monotone else {}
    for node in sorted(needs_monotone):
        if negating[node] is not None:
            reasons.append(f"leaf v{node} reaches the output through negating gate v{negating[node]}")

    for leaf in sampled:
        if not leaf.lower_bound:
            reasons.append(f"Monte Carlo leaf v{leaf.node} reports a point estimate, not a lower bound")

    if shared and not network.is_tree:
        reasons.append("correlated leaves feed a boolean network with shared sub-expressions")

    if shared:
        reasons.extend(_gate_reasons(gm, network, by_node))

    for leaf in shared:
        if not leaf.one_sided:
            kind = 'two-sided' if leaf.method is LeafMethod.ANALYTIC_INTERVAL else leaf.method.value
            reasons.append(f"leaf v{leaf.node} ({kind}) shares draws with other leaves")

    pairs_checked, min_corr, corr_reasons = _pairwise_correlations(
        gm, sorted((leaf for leaf in shared if leaf.one_sided), key=lambda leaf: leaf.node))
    reasons.extend(corr_reasons)

    certificate = Certificate(not reasons, _dedupe(reasons), pairs_checked, min_corr)
    if not certificate.certified:
        logger.debug(f"'{gm.name}' not certified: {'; '.join(certificate.reasons)}")
    return certificate


def _pairwise_correlations(gm: GraphicalModel, leaves: List[BernoulliLeaf]
                           ) -> Tuple[int, Optional[float], List[str]]:
    """
    Sign-adjusted covariance of every related pair of one-sided leaves.

    All pairs come out of one matrix product A Sigma A^T, where row i of A
    holds leaf i's coefficients times its sign.
    """
    if len(leaves) < 2:
        return 0, None, []
    primitives = sorted(frozenset().union(*(leaf.form.support for leaf in leaves)))
    column = {p: j for j, p in enumerate(primitives)}
    coeffs = np.zeros((len(leaves), len(primitives)))
    for i, leaf in enumerate(leaves):
        for p, v in leaf.form.coeffs:
            coeffs[i, column[p]] = leaf.sign * v
    corr = coeffs @ gm.family.covariance_matrix(primitives) @ coeffs.T

    position = {leaf.node: i for i, leaf in enumerate(leaves)}
    related = np.zeros(corr.shape, dtype=bool)
    for i, leaf in enumerate(leaves):
        for other in leaf.shares_ancestry_with:
            j = position.get(other)
            if j is not None and j > i:
                related[i, j] = True

    pairs = np.argwhere(related)
    if not len(pairs):
        return 0, None, []
    values = corr[related]
    reasons = [
        f"leaves v{leaves[i].node} and v{leaves[j].node} are negatively correlated ({corr[i, j]:.3g})"
        for i, j in pairs if corr[i, j] < -_CORR_TOL
    ]
    return int(len(pairs)), float(values.min()), reasons


def _gate_reasons(gm: GraphicalModel, network: BooleanNetwork,
                  leaves: Dict[int, BernoulliLeaf]) -> List[str]:
    """Correlated leaves may only meet at AND gates"""
    reasons = []
    blocks: Dict[int, frozenset] = {}
    for n in nx.topological_sort(network.graph):
        if n in leaves:
            blocks[n] = gm.primitive_blocks(n)
            continue
        table = network.tables[n]
        blocks[n] = frozenset().union(*(blocks[p] for p in table.parents))
        if _is_and(table):
            continue
        for g, h in itertools.combinations(table.parents, 2):
            if blocks[g].isdisjoint(blocks[h]):
                continue
            if _meet(network, leaves, g, h):
                reasons.append(f"correlated leaves are combined by non-AND gate v{n}")
                break
    return reasons


def _meet(network: BooleanNetwork, leaves: Dict[int, BernoulliLeaf], g: int, h: int) -> bool:
    """Some leaf above g shares draws with a different leaf above h"""
    above_g = [a for a in nx.ancestors(network.graph, g) | {g} if a in leaves]
    above_h = {b for b in nx.ancestors(network.graph, h) | {h} if b in leaves}
    return any(not leaves[a].shares_ancestry_with.isdisjoint(above_h) for a in above_g)


def _is_and(table) -> bool:
    return all(value == all(key) for key, value in table.rows)


def _dedupe(reasons: List[str]) -> List[str]:
    seen = []
    for r in reasons:
        if r not in seen:
            seen.append(r)
    return seen
