"""
PSP frontend - lexer, parser, pretty-printer and static validator.

The validator lives in psp.frontend.validator; it depends on psp.bindings,
which itself imports the syntax tree from this package.
"""

from psp.frontend.lexer import Token, TokenType, tokenize
from psp.frontend.parser import parse, parse_source
from psp.frontend.printer import pretty

__all__ = ['Token', 'TokenType', 'parse', 'parse_source', 'pretty', 'tokenize']
