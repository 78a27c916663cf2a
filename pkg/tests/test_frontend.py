"""
Lexer, parser and pretty-printer.
"""

import re

import numpy as np
import pytest

from psp.corpus import load_program, program_names, program_source
from psp.errors import LexError, ParseError
from psp.frontend import TokenType, parse_source, pretty, tokenize
from psp.frontend.syntax import Binary, ForLoop, Index, Sample, Unary, iter_loops
from psp.ops import ValueType


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

def test_declaration_tokens():
    tokens = tokenize("bool isSafe = True;")
    assert [t.type for t in tokens] == [
        TokenType.TYPE, TokenType.IDENT, TokenType.ASSIGN, TokenType.BOOL,
        TokenType.SEMICOLON, TokenType.EOF,
    ]


def test_boolean_update_tokens():
    tokens = tokenize("isSafe = isSafe && (!flyHigh || batteryGood);")
    assert [t.text for t in tokens[:-1]] == [
        'isSafe', '=', 'isSafe', '&&', '(', '!', 'flyHigh', '||', 'batteryGood', ')', ';',
    ]
    assert tokens[-1].type is TokenType.EOF


@pytest.mark.parametrize("text,kind", [
    ("2", TokenType.INT),
    ("2.5", TokenType.REAL),
    ("1e3", TokenType.REAL),
    ("3f", TokenType.REAL),
    (".5", TokenType.REAL),
])
def test_number_literals(text, kind):
    token = tokenize(text)[0]
    assert token.type is kind
    assert token.text == text


@pytest.mark.parametrize("text,kind", [
    ("<=", TokenType.OP),
    ("&&", TokenType.OP),
    ("++", TokenType.INCREMENT),
    ("+=", TokenType.INCREMENT),
    ("~", TokenType.TILDE),
])
def test_longest_operator_match(text, kind):
    tokens = tokenize(f"a {text} b")
    assert tokens[1].type is kind
    assert tokens[1].text == text


def test_comments_are_skipped_and_positions_kept():
    tokens = tokenize("// header\nx /* spans\nlines */ = 1;")
    assert [t.text for t in tokens[:-1]] == ['x', '=', '1', ';']
    assert tokens[0].loc == (2, 1)
    assert tokens[1].loc == (3, 10)


def test_keywords_types_and_distributions():
    tokens = tokenize("for double Gaussian Bernoulli while")
    assert [t.type for t in tokens[:-1]] == [
        TokenType.KEYWORD, TokenType.TYPE, TokenType.DIST, TokenType.DIST, TokenType.KEYWORD,
    ]


def test_unknown_character_reports_location():
    with pytest.raises(LexError) as exc:
        tokenize("x = 1;\ny = @;")
    assert exc.value.loc == (2, 5)
    assert "2:5" in str(exc.value)


def test_unterminated_block_comment():
    with pytest.raises(LexError, match="unterminated"):
        tokenize("x = 1; /* never closed")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def test_parse_obstacle_program():
    program = load_program('obstacle_avoidance')
    assert program.name == 'AvoidObstacle'
    assert [p.name for p in program.params] == ['x', 'Mu', 'Sigma']
    assert program.params[0].type.dims == (10, 2)
    assert program.return_type.base is ValueType.BOOL
    draw = program.body[0]
    assert isinstance(draw, Sample)
    assert draw.dist.family.value == 'Gaussian'
    loop = program.body[2]
    assert isinstance(loop, ForLoop)
    assert not loop.inclusive


def test_parse_battery_program_nested_loops():
    program = load_program('battery_aware_flight')
    loops = iter_loops(program.body)
    assert [loop.var for loop in loops] == ['i', 'j']
    update = loops[0].body[-1]
    # isSafe && (!flyHigh || batteryGood)
    assert isinstance(update.value, Binary) and update.value.op == 'and'
    assert update.value.right.op == 'or'
    assert isinstance(update.value.right.left, Unary)


def test_open_array_dimension():
    program = load_program('obstacle_trajectory')
    assert program.params[0].type.dims == (None, 2)


def test_both_index_spellings_are_equal():
    a = parse_source("bool P(double[2, 2] m) { return m[0, 1] > 0; }")
    b = parse_source("bool P(double[2, 2] m) { return m[0][1] > 0; }")
    assert a == b
    assert isinstance(a.return_expr.left, Index)


def test_grammar_form_loop_is_inclusive():
    program = parse_source(
        "bool P() { bool s = true; for i = 0 to 3 do s = s && (i < 5); return s; }"
    )
    loop = program.body[1]
    assert loop.inclusive
    assert loop.start.value == 0 and loop.stop.value == 3


def test_headerless_program():
    program = parse_source("bool s = true; return s;")
    assert program.name == 'main'
    assert program.params == ()


@pytest.mark.parametrize("source,message", [
    ("bool P() { while (true) { } return true; }", "while"),
    ("bool P(double a) { if (a > 0) { } return true; }", "if"),
    ("bool P() { bool s = true; }", "must end with a return"),
    ("bool P() { return true; bool s = true; }", "last statement"),
    ("bool P() { x = Gaussian(1.0); return x > 0; }", "takes 2"),
    ("bool P() { b ~ Bernoulli(0.5, 0.1); return b > 0; }", "takes 1"),
    ("bool P(double[] a) { a[0] = 1.0; return true; }", "read-only"),
    ("bool P() { x = 1.0 + Gaussian(0, 1); return x > 0; }", "whole right-hand side"),
    ("bool P() { bool s = true; for (int i = 0; i < 3; i += 2) s = s; return s; }", "step must be 1"),
    ("bool P() { bool s = true; for (int i = 0; i > 3; i++) s = s; return s; }", "'<' or '<='"),
    ("bool P(double a) { return sqrt(a) > 0; }", "function calls"),
])
def test_parse_errors(source, message):
    with pytest.raises(ParseError, match=message):
        parse_source(source)


def test_parse_error_has_location():
    with pytest.raises(ParseError) as exc:
        parse_source("bool P()\n{\n    while (true) { }\n    return true;\n}")
    assert exc.value.loc == (3, 5)


# ---------------------------------------------------------------------------
# Pretty-printer
# ---------------------------------------------------------------------------

def test_pretty_simple_program():
    program = parse_source("bool P(double a) { return a > 0; }")
    assert pretty(program) == "bool P(double a)\n{\n    return a > 0;\n}\n"


def test_pretty_keeps_needed_parentheses():
    program = parse_source("bool P(double a, double b) { return (a - (b - 1.0)) > 0 && !(a > b); }")
    text = pretty(program)
    assert "a - (b - 1.0) > 0" in text
    assert "!(a > b)" in text
    assert parse_source(text) == program


@pytest.mark.parametrize("name", program_names())
def test_pretty_parse_fixpoint(name):
    program = parse_source(program_source(name))
    text = pretty(program)
    assert parse_source(text) == program
    assert pretty(parse_source(text)) == text


_INJECTED = [
    ("while (true) { }", "'while' loops are not allowed"),
    ("while (1 < 2) s = s;", "'while' loops are not allowed"),
    ("if (true) { }", "'if' statements are not allowed"),
    ("if (1 > 0) s = s;", "'if' statements are not allowed"),
]


def _statement_boundaries(text):
    """Offsets where a statement may start, up to the final return"""
    end = text.rindex('return')
    offsets = [m.end() for m in re.finditer(r';\n', text) if m.end() <= end]
    return offsets + [end]


@pytest.mark.parametrize("name", program_names())
def test_banned_statements_are_rejected_anywhere(name):
    rng = np.random.default_rng(sum(map(ord, name)))
    for text in (program_source(name), pretty(load_program(name))):
        boundaries = _statement_boundaries(text)
        for _ in range(8):
            at = int(rng.choice(boundaries))
            statement, message = _INJECTED[int(rng.integers(len(_INJECTED)))]
            with pytest.raises(ParseError, match=message):
                parse_source(text[:at] + statement + '\n' + text[at:])
