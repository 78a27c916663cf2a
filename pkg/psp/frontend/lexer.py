"""
Lexer for PSP source text.

Covers the C-like surface of the corpus programs: identifiers, numeric and
boolean literals, keywords, `=`/`~` assignment, the boolean and comparison
operators, array indexing, `//` and `/* */` comments. Grammar rules (such
as the ban on `while`) are the parser's business; the lexer only rejects
characters it does not know.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List

from psp.errors import LexError

logger = logging.getLogger(__name__)


class TokenType(str, Enum):
    IDENT = "ident"
    INT = "int-literal"
    REAL = "real-literal"
    BOOL = "bool-literal"
    KEYWORD = "keyword"
    TYPE = "type"
    DIST = "distribution"
    ASSIGN = "assign"          # =
    TILDE = "tilde"            # ~
    OP = "op"                  # arithmetic / comparison / logical
    INCREMENT = "increment"    # ++ or +=
    LPAREN = "("
    RPAREN = ")"
    LBRACKET = "["
    RBRACKET = "]"
    LBRACE = "{"
    RBRACE = "}"
    COMMA = ","
    SEMICOLON = ";"
    DOT = "."
    EOF = "eof"


KEYWORDS = frozenset({'for', 'to', 'do', 'return', 'while', 'if', 'then', 'else'})
TYPE_NAMES = frozenset({'int', 'double', 'float', 'real', 'bool'})
DISTRIBUTIONS = frozenset({'Gaussian', 'Gamma', 'Beta', 'Bernoulli'})
BOOL_LITERALS = {'true': True, 'True': True, 'false': False, 'False': False}

# Longest match first
_OPERATORS = [
    ('&&', TokenType.OP), ('||', TokenType.OP),
    ('<=', TokenType.OP), ('>=', TokenType.OP), ('==', TokenType.OP), ('!=', TokenType.OP),
    ('++', TokenType.INCREMENT), ('+=', TokenType.INCREMENT),
    ('<', TokenType.OP), ('>', TokenType.OP), ('!', TokenType.OP),
    ('+', TokenType.OP), ('-', TokenType.OP), ('*', TokenType.OP), ('/', TokenType.OP), ('%', TokenType.OP),
    ('=', TokenType.ASSIGN), ('~', TokenType.TILDE),
    ('(', TokenType.LPAREN), (')', TokenType.RPAREN),
    ('[', TokenType.LBRACKET), (']', TokenType.RBRACKET),
    ('{', TokenType.LBRACE), ('}', TokenType.RBRACE),
    (',', TokenType.COMMA), (';', TokenType.SEMICOLON), ('.', TokenType.DOT),
]


@dataclass(frozen=True)
class Token:
    type: TokenType
    text: str
    line: int
    col: int

    @property
    def loc(self):
        return (self.line, self.col)

    def __repr__(self):
        return f"Token({self.type.value}, {self.text!r}, {self.line}:{self.col})"


def tokenize(source: str) -> List[Token]:
    """
    Split PSP source into tokens.

    Args:
        source: program text

    Returns:
        Token list terminated by a single EOF token

    Raises:
        LexError: on a character outside the PSP alphabet (with line/column)
    """
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    length = len(source)

    while pos < length:
        ch = source[pos]
        col = pos - line_start + 1

        if ch == '\n':
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch in ' \t\r\f﻿':
            pos += 1
            continue

        # Comments
        if source.startswith('//', pos):
            end = source.find('\n', pos)
            pos = length if end < 0 else end
            continue
        if source.startswith('/*', pos):
            end = source.find('*/', pos + 2)
            if end < 0:
                raise LexError("unterminated block comment", (line, col))
            for offset in range(pos, end):
                if source[offset] == '\n':
                    line += 1
                    line_start = offset + 1
            pos = end + 2
            continue

        if ch.isalpha() or ch == '_':
            end = pos + 1
            while end < length and (source[end].isalnum() or source[end] == '_'):
                end += 1
            word = source[pos:end]
            if word in BOOL_LITERALS:
                kind = TokenType.BOOL
            elif word in KEYWORDS:
                kind = TokenType.KEYWORD
            elif word in TYPE_NAMES:
                kind = TokenType.TYPE
            elif word in DISTRIBUTIONS:
                kind = TokenType.DIST
            else:
                kind = TokenType.IDENT
            tokens.append(Token(kind, word, line, col))
            pos = end
            continue

        if ch.isdigit() or (ch == '.' and pos + 1 < length and source[pos + 1].isdigit()):
            end, is_real = _scan_number(source, pos)
            tokens.append(Token(TokenType.REAL if is_real else TokenType.INT, source[pos:end], line, col))
            pos = end
            continue

        for text, kind in _OPERATORS:
            if source.startswith(text, pos):
                tokens.append(Token(kind, text, line, col))
                pos += len(text)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", (line, col))

    tokens.append(Token(TokenType.EOF, '', line, pos - line_start + 1))
    logger.debug(f"Tokenized {len(tokens) - 1} tokens over {line} lines")
    return tokens


def _scan_number(source: str, pos: int):
    """C-style literal: digits, optional fraction, optional exponent, optional f/d suffix"""
    length = len(source)
    end = pos
    is_real = False
    while end < length and source[end].isdigit():
        end += 1
    if end < length and source[end] == '.':
        is_real = True
        end += 1
        while end < length and source[end].isdigit():
            end += 1
    if end < length and source[end] in 'eE':
        ahead = end + 1
        if ahead < length and source[ahead] in '+-':
            ahead += 1
        if ahead < length and source[ahead].isdigit():
            is_real = True
            end = ahead
            while end < length and source[end].isdigit():
                end += 1
    if end < length and source[end] in 'fFdD':
        is_real = True
        end += 1
    return end, is_real
