"""
Command-line interface: compile, query, bench and plan.

Exit codes:
    0  success (query: safe)
    1  program, binding or inference error
    2  I/O error (missing or unreadable file)
    3  query answered unsafe
    4  mission failure (plan)
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from psp import __version__
from psp.artifacts import write_text
from psp.bindings import load_binding
from psp.compiler import to_dot
from psp.config import config, runtime_config
from psp.corpus import CORPUS_DIR, program_path
from psp.errors import PSPError
from psp.frontend.parser import parse_source
from psp.frontend.syntax import ProgramAst
from psp.inference.engine import compile_program, query_safety
from psp.oracle.benchmark import run_benchmark, write_benchmark
from psp.oracle.sampler import estimate
from psp.planner import (
    audit_log, default_course, load_planner_config, load_world, run_missions, save_world,
)
from psp.slp import dump

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COMPILE = 1
EXIT_IO = 2
EXIT_UNSAFE = 3
EXIT_MISSION = 4


def _resolve_program(spec: str) -> Path:
    """A path, or the stem of a bundled corpus program"""
    path = Path(spec)
    if path.exists() or path.suffix:
        return path
    bundled = program_path(spec)
    return bundled if bundled.exists() else path


def _load_program(spec: str) -> ProgramAst:
    path = _resolve_program(spec)
    return parse_source(path.read_text(encoding='utf-8'))


def _out_dir(args) -> Path:
    return Path(args.out) if args.out else config.out_dir_path


def cmd_compile(args) -> int:
    """Write the unrolled and folded SLP dumps and the DOT graph"""
    program = _load_program(args.program)
    binding = load_binding(args.binding)
    compiled = compile_program(program, binding)
    out_dir = _out_dir(args)
    stem = _resolve_program(args.program).stem

    slp_path = write_text(out_dir / f"{stem}.slp", dump(compiled.slp))
    folded_path = write_text(out_dir / f"{stem}.folded.slp", dump(compiled.folded))
    dot_path = write_text(out_dir / f"{stem}.dot", to_dot(compiled.model))
    report = {
        'program': compiled.model.name,
        'instructions': len(compiled.slp),
        'folded_instructions': len(compiled.folded),
        'nodes': {kind.value: n for kind, n in compiled.model.kind_counts().items()},
        'artifacts': [str(slp_path), str(folded_path), str(dot_path)],
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_query(args) -> int:
    """Print the verdict JSON; exit 0 when safe, 3 when unsafe"""
    program = _load_program(args.program)
    binding = load_binding(args.binding)
    compiled = compile_program(program, binding)
    verdict = query_safety(compiled.model, epsilon=args.epsilon, seed=args.seed,
                           certify=not args.no_certify, mc_samples=args.mc_samples)
    report = verdict.to_dict()
    if args.oracle_samples:
        oracle = estimate(compiled.slp, args.oracle_samples, seed=config.PSP_SEED if args.seed is None else args.seed)
        report['oracle'] = oracle.to_dict()
    print(json.dumps(report, indent=2))
    return EXIT_OK if verdict.safe else EXIT_UNSAFE


def cmd_bench(args) -> int:
    """Benchmark CSV and summary JSON"""
    result = run_benchmark(
        examples=args.examples,
        lengths=args.lengths,
        n_param_sets=args.param_sets,
        seed=config.PSP_SEED if args.seed is None else args.seed,
        oracle_ns=args.oracle_samples,
        epsilon=args.epsilon,
    )
    csv_path, json_path = write_benchmark(result, _out_dir(args))
    print(json.dumps({'rows': len(result.records), 'csv': str(csv_path), 'summary': str(json_path)}, indent=2))
    return EXIT_OK


def cmd_plan(args) -> int:
    """Run seeded missions; exit 4 when any mission fails or collides"""
    world = load_world(args.world) if args.world else default_course()
    cfg = load_planner_config(args.config, epsilon=args.epsilon)
    if args.snapshots:
        cfg = replace(cfg, snapshots=True)
    out_dir = _out_dir(args)
    save_world(world, out_dir / 'world.json')

    first = config.PSP_SEED if args.seed is None else args.seed
    results = run_missions(world, cfg, range(first, first + args.missions), out_dir)
    audits = [audit_log(r.log_path) for r in results]
    report = {
        'missions': len(results),
        'completed': sum(1 for r in results if r.completed),
        'clean': sum(1 for r in results if r.clean),
        'audit_violations': sum(len(a.violations) for a in audits),
        'summary': str(out_dir / 'missions.csv'),
    }
    print(json.dumps(report, indent=2))
    failed = report['clean'] < len(results) or report['audit_violations']
    return EXIT_MISSION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='psp',
        description='Compile probabilistic safety programs and query Pr(program returns true)',
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--threads', type=int, default=None,
                        help='Worker thread cap (default: PSP_THREADS)')
    parser.add_argument('--debug', action='store_true', help='DEBUG-level logging')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p, needs_program=True):
        if needs_program:
            p.add_argument('--program', required=True,
                           help=f"Program file, or the name of a bundled program in {CORPUS_DIR}")
            p.add_argument('--binding', required=True, help='Input binding JSON file')
        p.add_argument('--epsilon', type=float, default=None, help='Safety threshold (default: PSP_EPSILON)')
        p.add_argument('--seed', type=int, default=None, help='Root seed (default: PSP_SEED)')
        p.add_argument('--out', default=None, help='Output directory (default: PSP_OUT_DIR)')

    p = sub.add_parser('compile', help='Write SLP dumps and the DOT graph')
    common(p)
    p.set_defaults(handler=cmd_compile)

    p = sub.add_parser('query', help='Print the safety verdict as JSON')
    common(p)
    p.add_argument('--oracle-samples', type=int, default=None,
                   help='Also run the sampling oracle with this many samples')
    p.add_argument('--mc-samples', type=int, default=None, help='Samples per Monte Carlo leaf')
    p.add_argument('--no-certify', action='store_true',
                   help='Report point estimates for Monte Carlo leaves')
    p.set_defaults(handler=cmd_query)

    p = sub.add_parser('bench', help='Analytic engine vs sampling oracle')
    common(p, needs_program=False)
    p.add_argument('--examples', type=int, nargs='+', default=[1, 2, 3])
    p.add_argument('--lengths', type=int, nargs='+', default=[1, 10, 50, 100, 200, 300])
    p.add_argument('--param-sets', type=int, default=50)
    p.add_argument('--oracle-samples', type=int, nargs='+', default=[100, 1000, 10000])
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser('plan', help='Fly seeded missions on a course')
    common(p, needs_program=False)
    p.add_argument('--world', default=None, help='World JSON (default: built-in six-gate course)')
    p.add_argument('--config', default=None, help='Planner settings JSON')
    p.add_argument('--missions', type=int, default=1, help='Number of consecutive seeds to fly')
    p.add_argument('--snapshots', action='store_true', help='Write one SVG per cycle')
    p.set_defaults(handler=cmd_plan)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
    if args.threads is not None:
        runtime_config.set_threads(args.threads)
    logger.debug(f"{config!r}, threads={runtime_config.get_threads()} ({runtime_config.get_threads_source()})")

    try:
        return args.handler(args)
    except PSPError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_COMPILE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        # planner settings and world files
        print(f"error: {e}", file=sys.stderr)
        return EXIT_COMPILE
