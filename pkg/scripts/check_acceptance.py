#!/usr/bin/env python3
"""
Acceptance checker for psp

Runs the acceptance criteria end to end (corpus fidelity, exactness, leaf
soundness, false negatives, false-safe certificates, runtime, monotonicity,
planner missions) and prints a PASS/WARN/FAIL report.

Usage:
    python scripts/check_acceptance.py            # full scale (slow)
    python scripts/check_acceptance.py --quick    # reduced sample counts
    python scripts/check_acceptance.py --only 2 7 # selected criteria
"""

import argparse
import logging
import sys
import time
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.special import ndtr

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from psp.bindings import InputBinding  # noqa: E402
from psp.compiler import TruthTable, to_dot  # noqa: E402
from psp.corpus import load_fixture, load_program  # noqa: E402
from psp.inference import BooleanNetwork, boolean_inference, compile_program, query_safety  # noqa: E402
from psp.oracle import estimate, make_instance, run_benchmark  # noqa: E402
from psp.planner import PlannerConfig, audit_log, default_course, run_missions  # noqa: E402
from psp.slp import dump  # noqa: E402

CORPUS_CASES = ['obstacle_avoidance', 'battery_aware_flight', 'collision_avoidance']


def battery_closed_form(binding: InputBinding) -> float:
    """Product of Gaussian tail factors over the steps that fly high"""
    height = binding['height']
    level = binding['logbatteryLevel']
    thresh = binding['heightThresh']
    battery = binding['batteryThresh']
    p = 1.0
    for i in range(len(height) - 3):
        if not np.any(height[i:i + 3] > thresh):
            continue
        var = i * binding['variance']
        p *= float(level[i] > battery) if var == 0 else float(ndtr((level[i] - battery) / np.sqrt(var)))
    return p


def random_monotone_network(rng: np.random.Generator, n_leaves: int, n_gates: int) -> BooleanNetwork:
    """Random negation-free DAG of and/or gates over independent leaves"""
    priors = {i: float(rng.uniform(0.05, 0.95)) for i in range(n_leaves)}
    tables = {}
    network = BooleanNetwork(priors, tables, n_leaves + n_gates - 1)
    network.graph.add_nodes_from(priors)
    for g in range(n_leaves, n_leaves + n_gates):
        a, b = (int(v) for v in rng.choice(g, size=2, replace=False))
        op = all if rng.random() < 0.5 else any
        rows = tuple(((x, y), op((x, y))) for x in (False, True) for y in (False, True))
        tables[g] = TruthTable((a, b), rows)
        network.graph.add_edge(a, g)
        network.graph.add_edge(b, g)
    # keep only what reaches the output
    keep = {network.output} | nx.ancestors(network.graph, network.output)
    network.graph.remove_nodes_from([n for n in list(network.graph.nodes) if n not in keep])
    for n in list(priors):
        if n not in keep:
            del priors[n]
    for n in list(tables):
        if n not in keep:
            del tables[n]
    return network


class AcceptanceChecker:
    """Checks the pipeline against its acceptance criteria"""

    PASS = "PASS"
    WARN = "WARN"
    FAIL = "FAIL"
    SKIP = "SKIP"
    ERROR = "ERROR"

    def __init__(self, quick=False, only=None, out_dir='./out/acceptance'):
        self.quick = quick
        self.only = set(only or [])
        self.out_dir = Path(out_dir)
        self.results = []
        self._bench = None

    def add(self, status, category, detail):
        """Record a test result."""
        self.results.append((status, category, detail))

    # ── Test methods ──────────────────────────────────────────────

    def test_corpus(self):
        """1: corpus programs compile, answer queries, and dump stably"""
        for name in CORPUS_CASES:
            cat = f"Corpus ({name})"
            try:
                program = load_program(name)
                binding = load_fixture(name)
                first = compile_program(program, binding)
                second = compile_program(program, binding)
                if dump(first.folded) != dump(second.folded) or to_dot(first.model) != to_dot(second.model):
                    self.add(self.FAIL, cat, "SLP or DOT dump differs between runs")
                    continue
                verdict = query_safety(first.model)
                self.add(self.PASS, cat, f"{len(first.slp)} instructions, p_lower={verdict.p_lower:.6f}")
            except Exception as e:
                self.add(self.ERROR, cat, str(e))

    def test_exactness(self):
        """2: battery example matches the closed form and the oracle"""
        cat = "Exactness (battery)"
        n_oracle = 10_000 if self.quick else 1_000_000
        try:
            program = load_program('battery_aware_flight')
            worst_exact, worst_se = 0.0, 0.0
            for k in range(50):
                binding = make_instance(2, 10, k, seed=2024)
                compiled = compile_program(program, binding)
                p = query_safety(compiled.model).p_lower
                worst_exact = max(worst_exact, abs(p - battery_closed_form(binding)))
                oracle = estimate(compiled.slp, n_oracle, seed=k)
                se = max(oracle.standard_error, 1.0 / n_oracle)
                worst_se = max(worst_se, abs(p - oracle.p_hat) / se)
            detail = f"max |engine - closed form| = {worst_exact:.2e}, max oracle deviation = {worst_se:.2f} SE"
            ok = worst_exact <= 1e-9 and worst_se <= 3.0
            self.add(self.PASS if ok else self.FAIL, cat, detail)
        except Exception as e:
            self.add(self.ERROR, cat, str(e))

    def test_leaf_soundness(self):
        """3: single affine-Gaussian comparators vs the oracle"""
        cat = "Leaf soundness"
        n_oracle = 2_000 if self.quick else 20_000
        try:
            program = load_program('obstacle_trajectory')
            rng = np.random.default_rng(3)
            violations = 0
            for k in range(200):
                a = rng.normal(size=(2, 2))
                binding = InputBinding({
                    'x': rng.normal(size=(1, 2)),
                    'Mu': rng.normal(size=2),
                    'Sigma': a @ a.T + 0.1 * np.eye(2),
                })
                compiled = compile_program(program, binding)
                p = query_safety(compiled.model).p_lower
                oracle = estimate(compiled.slp, n_oracle, seed=k)
                se = max(oracle.standard_error, 1.0 / n_oracle)
                if abs(p - oracle.p_hat) > 3.0 * se:
                    violations += 1
            status = self.PASS if violations == 0 else (self.WARN if violations <= 2 else self.FAIL)
            self.add(status, cat, f"{violations}/200 comparators outside 3 SE")
        except Exception as e:
            self.add(self.ERROR, cat, str(e))

    def _benchmark(self):
        if self._bench is None:
            lengths = (10, 50) if self.quick else (10, 50, 100, 300)
            self._bench = run_benchmark(
                examples=(1, 2, 3),
                lengths=lengths,
                n_param_sets=10 if self.quick else 50,
                oracle_ns=(1000,) if self.quick else (100, 1000, 10000),
            )
        return self._bench

    def test_false_negatives(self):
        """4: oracle-safe but engine-unsafe trajectories"""
        try:
            summary = self._benchmark().summary
            for example, rates in sorted(summary['false_negative_rate'].items()):
                cat = f"False negatives (example {example})"
                worst = max(rates.values()) if rates else 0.0
                if worst <= 0.04:
                    status = self.PASS
                elif worst <= 0.06:
                    status = self.WARN
                else:
                    status = self.FAIL
                self.add(status, cat, f"worst rate over eps grid {worst:.3f}")
        except Exception as e:
            self.add(self.ERROR, "False negatives", str(e))

    def test_false_safe(self):
        """5: no certified verdict is safe when the oracle is confidently unsafe"""
        try:
            summary = self._benchmark().summary
            for example, counts in sorted(summary['false_safe'].items()):
                cat = f"False safe (example {example})"
                detail = (f"certified false-safe {counts['certified']}, uncertified {counts['total'] - counts['certified']}, "
                          f"{counts['certified_instances']}/{counts['instances']} instances certified")
                self.add(self.PASS if counts['certified'] == 0 else self.FAIL, cat, detail)
        except Exception as e:
            self.add(self.ERROR, "False safe", str(e))

    def test_runtime(self):
        """6: analytic query time at length 300 and speed-up over the oracle"""
        try:
            runtime = self._benchmark().summary['runtime_ns']
            for example in sorted(runtime):
                cat = f"Runtime (example {example})"
                analytic = runtime[example].get('analytic', {}).get('300')
                oracle = runtime[example].get('oracle-1000', {}).get('300')
                if analytic is None or oracle is None:
                    self.add(self.SKIP, cat, "length 300 not benchmarked")
                    continue
                median_ms = analytic['p50'] / 1e6
                speedup = oracle['p50'] / analytic['p50']
                ok = median_ms < 10.0 and speedup >= 10.0
                self.add(self.PASS if ok else self.FAIL, cat,
                         f"median {median_ms:.2f} ms, {speedup:.1f}x faster than 1000-sample oracle")
        except Exception as e:
            self.add(self.ERROR, "Runtime", str(e))

    def test_monotonicity(self):
        """7: raising a leaf probability never lowers a negation-free output"""
        cat = "Monotonicity"
        try:
            rng = np.random.default_rng(7)
            worst = 0.0
            for _ in range(500):
                network = random_monotone_network(rng, int(rng.integers(3, 9)), int(rng.integers(2, 12)))
                base = boolean_inference(network)
                for leaf in list(network.priors):
                    original = network.priors[leaf]
                    network.priors[leaf] = min(1.0, original + 0.01)
                    worst = min(worst, boolean_inference(network) - base)
                    network.priors[leaf] = original
            status = self.PASS if worst >= -1e-12 else self.FAIL
            self.add(status, cat, f"500 networks, largest decrease {-worst:.2e}")
        except Exception as e:
            self.add(self.ERROR, cat, str(e))

    def test_planner(self):
        """8: seeded missions on the six-gate course"""
        cat = "Planner missions"
        n_missions = 3 if self.quick else 100
        try:
            started = time.perf_counter()
            results = run_missions(default_course(), PlannerConfig(), range(n_missions), self.out_dir / 'missions')
            clean = sum(1 for r in results if r.clean)
            violations = sum(len(audit_log(r.records).violations) for r in results)
            elapsed = time.perf_counter() - started
            ok = clean >= 0.95 * n_missions and violations == 0
            self.add(self.PASS if ok else self.FAIL, cat,
                     f"{clean}/{n_missions} clean, {violations} audit violations, {elapsed:.0f} s")
        except Exception as e:
            self.add(self.ERROR, cat, str(e))

    # ── Main runner ───────────────────────────────────────────────

    def run_all(self):
        """Run all tests and print report. Returns exit code."""
        print()
        print("psp Acceptance Report")
        print("=" * 50)
        print(f"Mode: {'quick' if self.quick else 'full'}")
        print(f"Timestamp: {time.strftime('%Y-%m-%d %H:%M:%S')}")
        print()

        tests = {
            1: self.test_corpus,
            2: self.test_exactness,
            3: self.test_leaf_soundness,
            4: self.test_false_negatives,
            5: self.test_false_safe,
            6: self.test_runtime,
            7: self.test_monotonicity,
            8: self.test_planner,
        }
        for number, test in tests.items():
            if self.only and number not in self.only:
                continue
            test()

        for status, category, detail in self.results:
            print(f"[{status:5s}] {category} - {detail}")

        counts = {s: 0 for s in [self.PASS, self.WARN, self.FAIL, self.SKIP, self.ERROR]}
        for status, _, _ in self.results:
            counts[status] += 1

        total_tests = counts[self.PASS] + counts[self.FAIL] + counts[self.ERROR]
        print()
        print(f"Result: {counts[self.PASS]}/{total_tests} PASS", end="")
        if counts[self.WARN]:
            print(f", {counts[self.WARN]} WARN", end="")
        if counts[self.FAIL]:
            print(f", {counts[self.FAIL]} FAIL", end="")
        if counts[self.ERROR]:
            print(f", {counts[self.ERROR]} ERROR", end="")
        if counts[self.SKIP]:
            print(f", {counts[self.SKIP]} SKIP", end="")
        print()

        has_failures = counts[self.FAIL] > 0 or counts[self.ERROR] > 0
        if has_failures:
            print()
            print("ACCEPTANCE ISSUES DETECTED - review FAIL/ERROR results above")

        return 1 if has_failures else 0


def main():
    parser = argparse.ArgumentParser(description="Run the psp acceptance criteria")
    parser.add_argument('--quick', action='store_true', help='Reduced sample counts and missions')
    parser.add_argument('--only', type=int, nargs='+', help='Criterion numbers to run (1-8)')
    parser.add_argument('--out', default='./out/acceptance', help='Artifact directory for mission logs')
    args = parser.parse_args()

    logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    checker = AcceptanceChecker(args.quick, args.only, args.out)
    sys.exit(checker.run_all())


if __name__ == '__main__':
    main()
