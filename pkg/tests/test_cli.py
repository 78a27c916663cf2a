"""
Command-line surface: subcommands, artifacts and exit codes.
"""

import json

import pytest

from psp.cli import EXIT_COMPILE, EXIT_IO, EXIT_MISSION, EXIT_OK, EXIT_UNSAFE, run
from psp.corpus import fixture_path


def _query(capsys, *extra):
    code = run(['query', '--program', 'obstacle_trajectory',
                '--binding', str(fixture_path('obstacle_single_safe')), *extra])
    return code, capsys.readouterr().out


def test_query_safe(capsys):
    code, out = _query(capsys, '--epsilon', '0.9')
    assert code == EXIT_OK
    report = json.loads(out)
    assert report['safe'] is True
    assert report['p_lower'] == pytest.approx(0.977250, abs=1e-6)
    assert 'oracle' not in report


def test_query_unsafe(capsys):
    code, out = _query(capsys, '--epsilon', '0.99')
    assert code == EXIT_UNSAFE
    assert json.loads(out)['safe'] is False


def test_query_with_oracle(capsys):
    code, out = _query(capsys, '--epsilon', '0.5', '--oracle-samples', '2000', '--seed', '3')
    assert code == EXIT_OK
    oracle = json.loads(out)['oracle']
    assert oracle['n'] == 2000
    assert oracle['seed'] == 3


def test_compile_writes_artifacts(tmp_path, capsys):
    code = run(['compile', '--program', 'obstacle_avoidance',
                '--binding', str(fixture_path('obstacle_avoidance')), '--out', str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['instructions'] == 82
    assert report['nodes']['Comparator'] == 10
    slp_text = (tmp_path / 'obstacle_avoidance.slp').read_text()
    assert slp_text.startswith('# AvoidObstacle: 82 instructions')
    assert not slp_text.endswith('\n\n')
    assert (tmp_path / 'obstacle_avoidance.folded.slp').exists()
    assert (tmp_path / 'obstacle_avoidance.dot').read_text().startswith('digraph')


def test_program_file_path(tmp_path, capsys):
    program = tmp_path / 'coin.psp'
    program.write_text("bool Coin() { x = Gaussian(0, 1); return x > 0; }")
    binding = tmp_path / 'empty.json'
    binding.write_text('{"params": {}}')
    code = run(['query', '--program', str(program), '--binding', str(binding), '--epsilon', '0.5'])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)['p_lower'] == pytest.approx(0.5)


def test_invalid_program_exits_1(tmp_path, capsys):
    program = tmp_path / 'bad.psp'
    program.write_text("bool P() { while (true) { } return true; }")
    code = run(['query', '--program', str(program), '--binding', str(fixture_path('always_safe'))])
    assert code == EXIT_COMPILE
    assert 'error:' in capsys.readouterr().err


def test_integer_division_by_zero_exits_1(tmp_path, capsys):
    program = tmp_path / 'div.psp'
    program.write_text("bool P() { int k = 0; int a = 1 / k; return a > 0; }")
    binding = tmp_path / 'empty.json'
    binding.write_text('{"params": {}}')
    code = run(['query', '--program', str(program), '--binding', str(binding)])
    assert code == EXIT_COMPILE
    err = capsys.readouterr().err
    assert 'error:' in err
    assert 'integer division by zero' in err
    assert 'Traceback' not in err


def test_binding_mismatch_exits_1(capsys):
    code = run(['query', '--program', 'collision_avoidance',
                '--binding', str(fixture_path('obstacle_avoidance'))])
    assert code == EXIT_COMPILE


def test_missing_binding_exits_2(tmp_path, capsys):
    code = run(['query', '--program', 'always_safe', '--binding', str(tmp_path / 'absent.json')])
    assert code == EXIT_IO
    assert 'error:' in capsys.readouterr().err


def test_bench(tmp_path, capsys):
    code = run(['bench', '--examples', '2', '--lengths', '1', '2', '--param-sets', '1',
                '--oracle-samples', '100', '--out', str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['rows'] == 2 * 2
    assert (tmp_path / 'benchmark.csv').exists()
    assert (tmp_path / 'benchmark_summary.json').exists()


def test_plan_rejects_unknown_settings(tmp_path, capsys):
    settings = tmp_path / 'planner.json'
    settings.write_text('{"nodes": 10}')
    code = run(['plan', '--config', str(settings), '--out', str(tmp_path)])
    assert code == EXIT_COMPILE


@pytest.mark.slow
def test_plan_cycle_cap_is_a_mission_failure(tmp_path, capsys):
    settings = tmp_path / 'planner.json'
    settings.write_text(json.dumps({'n_nodes': 40, 'max_cycles': 2}))
    code = run(['plan', '--config', str(settings), '--out', str(tmp_path), '--seed', '0'])
    assert code == EXIT_MISSION
    report = json.loads(capsys.readouterr().out)
    assert report['missions'] == 1
    assert report['completed'] == 0
    assert report['audit_violations'] == 0
    assert (tmp_path / 'mission_0.jsonl').exists()
    assert (tmp_path / 'missions.csv').exists()
    assert (tmp_path / 'world.json').exists()
