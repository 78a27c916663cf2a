"""
Safety queries: Pr(program returns true) as a lower bound, and the verdict
at a threshold.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

from psp.bindings import InputBinding
from psp.compiler import GraphicalModel, NodeKind, compile_model
from psp.config import config
from psp.errors import InferenceError
from psp.frontend.syntax import ProgramAst
from psp.frontend.validator import ValidatedProgram, validate
from psp.inference.boolean import boolean_inference, build_network
from psp.inference.certify import Certificate, certify_lower_bound
from psp.inference.leaves import BernoulliLeaf, LeafMethod, build_leaves
from psp.slp import StraightLineProgram
from psp.unroller import constant_fold, unroll

logger = logging.getLogger(__name__)


@dataclass
class CompiledInstance:
    """Every intermediate form of one program/binding pair"""
    validated: ValidatedProgram
    slp: StraightLineProgram
    folded: StraightLineProgram
    model: GraphicalModel


@dataclass
class SafetyVerdict:
    p_lower: float
    epsilon: float
    safe: bool
    certified: bool
    per_leaf: List[BernoulliLeaf] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    method: str = "constant"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p_lower': self.p_lower,
            'epsilon': self.epsilon,
            'safe': self.safe,
            'certified': self.certified,
            'method': self.method,
            'per_leaf': [leaf.to_dict() for leaf in self.per_leaf],
            'notes': list(self.notes),
        }


def compile_program(program: Union[ProgramAst, ValidatedProgram],
                    binding: InputBinding) -> CompiledInstance:
    """validate -> unroll -> fold -> compile for one binding"""
    if isinstance(program, ValidatedProgram):
        vp = validate(program.ast, binding)
    else:
        vp = validate(program, binding)
    slp = unroll(vp, binding)
    folded = constant_fold(slp)
    return CompiledInstance(vp, slp, folded, compile_model(folded))


def evaluate_model(gm: GraphicalModel, seed: int = 0, certify: bool = True,
                   mc_samples: Optional[int] = None, max_width: Optional[int] = None):
    """
    Leaves, boolean inference and certificate for a compiled model.

    Returns:
        (p_lower, leaves, certificate, method) where method names the
        boolean stage ('constant', 'leaf', 'tree' or 'elimination')
    """
    output = gm.nodes[gm.output]
    if output.kind is NodeKind.BOOLEAN_CONST:
        return (1.0 if output.value else 0.0), [], Certificate(True), 'constant'

    mc_samples = config.PSP_MC_SAMPLES if mc_samples is None else mc_samples
    leaves = build_leaves(gm, seed, mc_samples, lower_bounds=certify)
    network = build_network(gm, {leaf.node: leaf.p_true for leaf in leaves})
    p = boolean_inference(network, max_width)
    if gm.output in network.priors:
        method = 'leaf'
    else:
        method = 'tree' if network.is_tree else 'elimination'
    certificate = certify_lower_bound(gm, leaves, network)
    return p, leaves, certificate, method


def query_safety(program: Union[ProgramAst, ValidatedProgram, GraphicalModel],
                 binding: Optional[InputBinding] = None,
                 epsilon: Optional[float] = None,
                 seed: Optional[int] = None,
                 certify: bool = True,
                 mc_samples: Optional[int] = None,
                 max_width: Optional[int] = None,
                 verbose: bool = True) -> SafetyVerdict:
    """
    Lower-bound probability that the program returns true, and the verdict.

    Args:
        program: parsed or validated program (compiled here against the
                 binding), or an already compiled model
        binding: concrete inputs (not needed for a compiled model)
        epsilon: safety threshold in [0, 1] (default PSP_EPSILON)
        seed: root seed for Monte Carlo leaves (default PSP_SEED)
        certify: Monte Carlo leaves report lower confidence bounds
        mc_samples: samples per Monte Carlo leaf (default PSP_MC_SAMPLES)
        max_width: elimination width cap (default PSP_MAX_WIDTH)
        verbose: log the summary at INFO (DEBUG otherwise, for callers
                 issuing many queries)

    Returns:
        SafetyVerdict with safe == (p_lower >= epsilon)

    Raises:
        PSPError subclasses from compilation; InferenceError on a bad
        epsilon or an elimination width above the cap
    """
    epsilon = config.PSP_EPSILON if epsilon is None else float(epsilon)
    if not 0.0 <= epsilon <= 1.0:
        raise InferenceError(f"epsilon must lie in [0, 1], got {epsilon}")
    seed = config.PSP_SEED if seed is None else int(seed)

    if isinstance(program, GraphicalModel):
        gm = program
    else:
        if binding is None:
            raise InferenceError("a binding is required to compile the program")
        gm = compile_program(program, binding).model

    p, leaves, certificate, method = evaluate_model(gm, seed, certify, mc_samples, max_width)
    notes = list(certificate.reasons)
    if any(leaf.method is LeafMethod.MONTE_CARLO for leaf in leaves):
        notes.append("some comparators were estimated by sampling")
    verdict = SafetyVerdict(p, epsilon, p >= epsilon, certificate.certified, leaves, notes, method)
    level = logging.INFO if verbose else logging.DEBUG
    if not verdict.certified:
        logger.log(logging.WARNING if verbose else logging.DEBUG,
                   f"'{gm.name}': result is not a certified lower bound ({'; '.join(certificate.reasons)})")
    logger.log(
        level,
        f"'{gm.name}': p_lower={p:.6f} epsilon={epsilon} -> {'SAFE' if verdict.safe else 'UNSAFE'} "
        f"({len(leaves)} leaves, {method})"
    )
    return verdict
