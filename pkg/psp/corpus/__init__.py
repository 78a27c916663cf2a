"""
Bundled PSP programs and fixture bindings.
"""

from pathlib import Path

from psp.bindings import InputBinding, load_binding
from psp.frontend.parser import parse_source
from psp.frontend.syntax import ProgramAst

CORPUS_DIR = Path(__file__).resolve().parent

# Example id -> corpus program used by the benchmark
EXAMPLES = {
    1: 'obstacle_trajectory',
    2: 'battery_aware_flight',
    3: 'collision_avoidance',
}


def program_path(name: str) -> Path:
    return CORPUS_DIR / f"{name}.psp"


def fixture_path(name: str) -> Path:
    return CORPUS_DIR / f"{name}.json"


def program_source(name: str) -> str:
    return program_path(name).read_text(encoding='utf-8')


def load_program(name: str) -> ProgramAst:
    """Parse a bundled program by file stem"""
    return parse_source(program_source(name))


def load_fixture(name: str) -> InputBinding:
    return load_binding(fixture_path(name))


def program_names():
    return sorted(p.stem for p in CORPUS_DIR.glob('*.psp'))
