"""
Benchmark harness: analytic engine vs. forward-sampling oracle over random
instances of the corpus examples and a range of trajectory lengths.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from psp.artifacts import write_csv, write_json
from psp.config import config
from psp.corpus import EXAMPLES, load_program
from psp.frontend.validator import validate
from psp.inference.engine import compile_program, query_safety
from psp.oracle.instances import make_instance
from psp.oracle.sampler import estimate
from psp.unroller import unroll

logger = logging.getLogger(__name__)

CSV_HEADER = ('example', 'length', 'param_set', 'method', 'wall_ns', 'p', 'epsilon', 'verdict')

DEFAULT_ORACLE_NS = (100, 1000, 10000)
DEFAULT_EPS_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
MAX_LENGTH = 300


@dataclass(frozen=True)
class BenchmarkRecord:
    example: int
    length: int
    param_set: int
    method: str
    wall_ns: int
    p: float
    epsilon: float
    verdict: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class _Cell:
    """Analytic answer and reference oracle interval of one instance"""
    example: int
    length: int
    param_set: int
    p_analytic: float
    certified: bool
    p_oracle: float
    oracle_low: float
    oracle_high: float


@dataclass
class BenchmarkResult:
    records: List[BenchmarkRecord] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


def _verdict(p: float, epsilon: float) -> str:
    return 'safe' if p >= epsilon else 'unsafe'


def run_benchmark(examples: Sequence[int] = (1, 2, 3),
                  lengths: Sequence[int] = (1, 10, 50, 100, 200, 300),
                  n_param_sets: int = 50,
                  eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                  seed: int = 0,
                  oracle_ns: Sequence[int] = DEFAULT_ORACLE_NS,
                  epsilon: Optional[float] = None) -> BenchmarkResult:
    """
    Time and compare both procedures on every (example, length, parameter set).

    Args:
        examples: corpus example ids (1 obstacle, 2 battery, 3 collision)
        lengths: trajectory lengths, each in [1, 300]
        n_param_sets: random parameter sets per (example, length)
        eps_grid: thresholds for the false-negative sweep
        seed: root seed for instances and oracle runs
        oracle_ns: oracle sample counts; the largest is the reference
        epsilon: threshold for the per-row verdict column (default PSP_EPSILON)

    Returns:
        BenchmarkResult with one analytic row and one row per oracle n for
        every instance, plus the summary
    """
    epsilon = config.PSP_EPSILON if epsilon is None else epsilon
    for length in lengths:
        if not 1 <= length <= MAX_LENGTH:
            raise ValueError(f"trajectory length {length} outside [1, {MAX_LENGTH}]")
    oracle_ns = tuple(sorted(oracle_ns))
    reference_n = oracle_ns[-1]

    result = BenchmarkResult()
    cells: List[_Cell] = []
    for example in examples:
        program = load_program(EXAMPLES[example])
        for length in lengths:
            for param_set in range(n_param_sets):
                binding = make_instance(example, length, param_set, seed)
                instance_seed = int(np.random.SeedSequence(seed, spawn_key=(example, length, param_set))
                                    .generate_state(1)[0])

                start = time.perf_counter_ns()
                compiled = compile_program(program, binding)
                verdict = query_safety(compiled.model, epsilon=epsilon, seed=instance_seed)
                wall = time.perf_counter_ns() - start
                result.records.append(BenchmarkRecord(
                    example, length, param_set, 'analytic', wall, verdict.p_lower, epsilon,
                    _verdict(verdict.p_lower, epsilon),
                ))

                reference = None
                for n in oracle_ns:
                    start = time.perf_counter_ns()
                    slp = unroll(validate(program, binding), binding)
                    oracle = estimate(slp, n, seed=instance_seed)
                    wall = time.perf_counter_ns() - start
                    result.records.append(BenchmarkRecord(
                        example, length, param_set, f"oracle-{n}", wall, oracle.p_hat, epsilon,
                        _verdict(oracle.p_hat, epsilon),
                    ))
                    if n == reference_n:
                        reference = oracle
                cells.append(_Cell(
                    example, length, param_set, verdict.p_lower, verdict.certified,
                    reference.p_hat, reference.ci_low, reference.ci_high,
                ))
            logger.info(f"Benchmark example {example} length {length}: {n_param_sets} instance(s) done")

    result.summary = summarize(result.records, cells, eps_grid, oracle_ns)
    result.summary['config'] = {
        'examples': list(examples), 'lengths': list(lengths), 'n_param_sets': n_param_sets,
        'eps_grid': list(eps_grid), 'seed': seed, 'oracle_ns': list(oracle_ns), 'epsilon': epsilon,
    }
    return result


def summarize(records: Sequence[BenchmarkRecord], cells: Sequence[_Cell],
              eps_grid: Sequence[float], oracle_ns: Sequence[int]) -> Dict[str, Any]:
    """
    Runtime percentiles per (example, method, length); false-negative rates
    (oracle confidently safe, engine unsafe) per threshold; false-safe counts
    (engine safe, oracle confidently unsafe).
    """
    runtime: Dict[str, Dict[str, Dict[str, Dict[str, float]]]] = {}
    grouped: Dict[Tuple[int, str, int], List[int]] = {}
    for r in records:
        grouped.setdefault((r.example, r.method, r.length), []).append(r.wall_ns)
    for (example, method, length), walls in sorted(grouped.items()):
        values = np.asarray(walls, dtype=float)
        runtime.setdefault(str(example), {}).setdefault(method, {})[str(length)] = {
            'p50': float(np.percentile(values, 50)),
            'p90': float(np.percentile(values, 90)),
            'p99': float(np.percentile(values, 99)),
            'mean': float(values.mean()),
        }

    false_negative: Dict[str, Dict[str, float]] = {}
    false_safe: Dict[str, Dict[str, Any]] = {}
    for example in sorted({c.example for c in cells}):
        mine = [c for c in cells if c.example == example]
        rates = {}
        fs_total, fs_certified = 0, 0
        for eps in eps_grid:
            oracle_safe = [c for c in mine if c.oracle_low >= eps]
            missed = [c for c in oracle_safe if c.p_analytic < eps]
            rates[f"{eps:g}"] = len(missed) / len(oracle_safe) if oracle_safe else 0.0
            wrong = [c for c in mine if c.p_analytic >= eps and c.oracle_high < eps]
            fs_total += len(wrong)
            fs_certified += sum(1 for c in wrong if c.certified)
        false_negative[str(example)] = rates
        false_safe[str(example)] = {
            'total': fs_total,
            'certified': fs_certified,
            'certified_instances': sum(1 for c in mine if c.certified),
            'instances': len(mine),
        }

    return {
        'rows': len(records),
        'runtime_ns': runtime,
        'false_negative_rate': false_negative,
        'false_safe': false_safe,
        'reference_oracle_n': max(oracle_ns),
    }


def write_benchmark(result: BenchmarkResult, out_dir) -> Tuple[Path, Path]:
    """Write benchmark.csv and benchmark_summary.json under out_dir"""
    out_dir = Path(out_dir)
    csv_path = write_csv(out_dir / 'benchmark.csv', CSV_HEADER, (r.to_dict() for r in result.records))
    json_path = write_json(out_dir / 'benchmark_summary.json', result.summary)
    logger.info(f"Benchmark written: {csv_path} ({len(result.records)} rows), {json_path}")
    return csv_path, json_path
