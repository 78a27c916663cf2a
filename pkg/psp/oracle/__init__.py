"""
Sampling oracle - forward Monte Carlo estimates and the benchmark harness.
"""

from psp.oracle.benchmark import (
    BenchmarkRecord, BenchmarkResult, run_benchmark, summarize, write_benchmark,
)
from psp.oracle.instances import GENERATORS, make_instance
from psp.oracle.sampler import OracleEstimate, estimate

__all__ = [
    'BenchmarkRecord', 'BenchmarkResult', 'GENERATORS', 'OracleEstimate', 'estimate',
    'make_instance', 'run_benchmark', 'summarize', 'write_benchmark',
]
