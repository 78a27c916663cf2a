"""
Forward-sampling oracle: Pr(program returns true) by simulating the
straight-line program on ancestral draws.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from psp.config import config, runtime_config
from psp.errors import InferenceError
from psp.inference.gaussian import wilson_interval
from psp.inference.leaves import MIN_MC_SAMPLES
from psp.slp import StraightLineProgram, sample_draws, simulate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleEstimate:
    p_hat: float
    n: int
    successes: int
    ci_low: float
    ci_high: float
    seed: int
    confidence: float

    @property
    def standard_error(self) -> float:
        return float(np.sqrt(max(self.p_hat * (1.0 - self.p_hat), 0.0) / self.n))

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _count_chunk(slp: StraightLineProgram, seed_seq: np.random.SeedSequence, size: int) -> int:
    rng = np.random.default_rng(seed_seq)
    draws = sample_draws(slp, rng, size)
    outcome = simulate(slp, draws, size)
    return int(np.count_nonzero(np.asarray(outcome, dtype=bool)))


def estimate(slp: StraightLineProgram, n: int, seed: int = 0,
             confidence: Optional[float] = None,
             chunk_size: Optional[int] = None,
             workers: Optional[int] = None) -> OracleEstimate:
    """
    Monte Carlo estimate with a Wilson interval.

    Samples are split into fixed-size chunks, each with its own child seed,
    so the result depends only on (program, n, seed, chunk size) and not on
    the worker count.

    Args:
        slp: unrolled program (inputs are baked in)
        n: total samples, at least 100
        seed: root seed
        confidence: Wilson level (default PSP_WILSON_CONFIDENCE)
        chunk_size: samples per chunk (default PSP_CHUNK_SIZE)
        workers: thread cap (default from RuntimeConfig / PSP_THREADS)

    Raises:
        InferenceError: n < 100
    """
    if n < MIN_MC_SAMPLES:
        raise InferenceError(f"the oracle needs at least {MIN_MC_SAMPLES} samples, got {n}")
    confidence = config.PSP_WILSON_CONFIDENCE if confidence is None else confidence
    chunk_size = config.PSP_CHUNK_SIZE if chunk_size is None else max(1, int(chunk_size))
    workers = runtime_config.get_threads() if workers is None else max(1, int(workers))

    sizes = [chunk_size] * (n // chunk_size)
    if n % chunk_size:
        sizes.append(n % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    if workers == 1 or len(sizes) == 1:
        counts = [_count_chunk(slp, s, size) for s, size in zip(children, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(sizes))) as pool:
            counts = list(pool.map(lambda args: _count_chunk(slp, *args), zip(children, sizes)))

    successes = sum(counts)
    low, high = wilson_interval(successes, n, confidence)
    result = OracleEstimate(successes / n, n, successes, low, high, seed, confidence)
    logger.debug(
        f"Oracle '{slp.name}': p_hat={result.p_hat:.6f} [{low:.6f}, {high:.6f}] "
        f"n={n} chunks={len(sizes)}"
    )
    return result
