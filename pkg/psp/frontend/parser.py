"""
Recursive-descent parser for PSP source.

Accepts both the C-like surface of the corpus programs and the grammar
form `for i = c1 to c2 do S`. `while` and `if` are rejected here with a
message naming the restriction they break.
"""

import logging
from typing import List, Optional, Tuple

from psp.errors import ParseError
from psp.frontend.lexer import BOOL_LITERALS, Token, TokenType, tokenize
from psp.frontend.syntax import (
    Assign, Binary, DistributionSpec, Expr, Family, ForLoop, GetLength, Index,
    Literal, Name, Param, ProgramAst, Sample, Stmt, TypeSpec, Unary,
)
from psp.ops import BINARY_SYMBOLS, PRECEDENCE, UNARY_SYMBOLS, ValueType

logger = logging.getLogger(__name__)

_TYPE_MAP = {
    'int': ValueType.INT,
    'double': ValueType.REAL,
    'float': ValueType.REAL,
    'real': ValueType.REAL,
    'bool': ValueType.BOOL,
}

_BANNED = {
    'while': "'while' loops are not allowed in a PSP: use a for loop whose iteration count is known at compile time",
    'if': "'if' statements are not allowed in a PSP: programs are branch-free (no if-then-else)",
    'then': "'then' is not allowed in a PSP: programs are branch-free (no if-then-else)",
    'else': "'else' is not allowed in a PSP: programs are branch-free (no if-then-else)",
}


def parse(tokens: List[Token]) -> ProgramAst:
    """
    Build a ProgramAst from a token sequence.

    Raises:
        ParseError: on grammar violations, banned constructs, or distribution
                    calls with the wrong number of parameters
    """
    program = _Parser(tokens).program()
    logger.debug(f"Parsed program '{program.name}' ({len(program.params)} params, {len(program.body)} top-level statements)")
    return program


def parse_source(source: str) -> ProgramAst:
    """tokenize + parse"""
    return parse(tokenize(source))


class _Parser:

    def __init__(self, tokens: List[Token]):
        if not tokens or tokens[-1].type is not TokenType.EOF:
            tokens = list(tokens) + [Token(TokenType.EOF, '', 0, 0)]
        self.tokens = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        token = self.current
        if token.type is not TokenType.EOF:
            self.pos += 1
        return token

    def check(self, kind: TokenType, text: Optional[str] = None) -> bool:
        token = self.current
        return token.type is kind and (text is None or token.text == text)

    def accept(self, kind: TokenType, text: Optional[str] = None) -> Optional[Token]:
        if self.check(kind, text):
            return self.advance()
        return None

    def expect(self, kind: TokenType, text: Optional[str] = None, what: Optional[str] = None) -> Token:
        if self.check(kind, text):
            return self.advance()
        self._reject_banned()
        wanted = what or (repr(text) if text else kind.value)
        found = self.current.text or 'end of input'
        raise ParseError(f"expected {wanted}, found {found!r}", self.current.loc)

    def _reject_banned(self):
        token = self.current
        if token.type is TokenType.KEYWORD and token.text in _BANNED:
            raise ParseError(_BANNED[token.text], token.loc)

    # -- program ------------------------------------------------------------

    def program(self) -> ProgramAst:
        start = self.current
        if self.check(TokenType.TYPE) and self._looks_like_header():
            return_type = self.type_spec()
            name = self.expect(TokenType.IDENT, what='program name').text
            params = self.params()
            self.expect(TokenType.LBRACE)
            body, return_expr = self.body_with_return(closing=TokenType.RBRACE)
            self.expect(TokenType.RBRACE)
        else:
            return_type = TypeSpec(ValueType.BOOL)
            name = 'main'
            params = ()
            body, return_expr = self.body_with_return(closing=TokenType.EOF)
        if not self.check(TokenType.EOF):
            raise ParseError(f"unexpected {self.current.text!r} after program end", self.current.loc)
        return ProgramAst(name, return_type, params, body, return_expr, loc=start.loc)

    def _looks_like_header(self) -> bool:
        # TYPE [ '[' ... ']' ] IDENT '('
        offset = 1
        if self.peek(offset).type is TokenType.LBRACKET:
            while self.peek(offset).type not in (TokenType.RBRACKET, TokenType.EOF):
                offset += 1
            offset += 1
        return self.peek(offset).type is TokenType.IDENT and self.peek(offset + 1).type is TokenType.LPAREN

    def params(self) -> Tuple[Param, ...]:
        self.expect(TokenType.LPAREN)
        params: List[Param] = []
        if not self.check(TokenType.RPAREN):
            while True:
                loc = self.current.loc
                type_spec = self.type_spec()
                name = self.expect(TokenType.IDENT, what='parameter name').text
                params.append(Param(name, type_spec, loc=loc))
                if not self.accept(TokenType.COMMA):
                    break
        self.expect(TokenType.RPAREN)
        return tuple(params)

    def type_spec(self) -> TypeSpec:
        token = self.expect(TokenType.TYPE, what='type name')
        base = _TYPE_MAP[token.text]
        if not self.accept(TokenType.LBRACKET):
            return TypeSpec(base)
        dims: List[Optional[int]] = []
        while True:
            literal = self.accept(TokenType.INT)
            dims.append(int(literal.text) if literal else None)
            if self.accept(TokenType.COMMA):
                continue
            self.expect(TokenType.RBRACKET)
            break
        return TypeSpec(base, tuple(dims))

    def body_with_return(self, closing: TokenType):
        statements: List[Stmt] = []
        while not self.check(TokenType.KEYWORD, 'return'):
            if self.check(closing) or self.check(TokenType.EOF):
                raise ParseError("program must end with a return statement", self.current.loc)
            statements.append(self.statement())
        self.advance()
        return_expr = self.expression()
        self.expect(TokenType.SEMICOLON)
        if not self.check(closing):
            raise ParseError("return must be the last statement of the program", self.current.loc)
        return tuple(statements), return_expr

    # -- statements ---------------------------------------------------------

    def statement(self) -> Stmt:
        self._reject_banned()
        token = self.current
        if token.type is TokenType.KEYWORD and token.text == 'for':
            return self.for_loop()
        if token.type is TokenType.KEYWORD and token.text == 'return':
            raise ParseError("return must be the last statement of the program", token.loc)
        if token.type is TokenType.TYPE:
            decl = self.type_spec()
            return self.assignment(decl, token.loc)
        if token.type is TokenType.IDENT:
            return self.assignment(None, token.loc)
        raise ParseError(f"expected a statement, found {token.text or 'end of input'!r}", token.loc)

    def assignment(self, decl: Optional[TypeSpec], loc) -> Stmt:
        target = self.expect(TokenType.IDENT, what='variable name')
        if self.check(TokenType.LBRACKET):
            raise ParseError(f"array elements are read-only: cannot assign to '{target.text}[...]'", self.current.loc)
        tilde = bool(self.accept(TokenType.TILDE))
        if not tilde:
            self.expect(TokenType.ASSIGN, what="'=' or '~'")
        if self.check(TokenType.DIST):
            dist = self.distribution()
            self.expect(TokenType.SEMICOLON)
            return Sample(target.text, dist, decl, tilde, loc=loc)
        if tilde:
            raise ParseError("'~' must be followed by a distribution call", self.current.loc)
        value = self.expression()
        self.expect(TokenType.SEMICOLON)
        return Assign(target.text, value, decl, loc=loc)

    def distribution(self) -> DistributionSpec:
        token = self.advance()
        family = Family(token.text)
        self.expect(TokenType.LPAREN)
        args: List[Expr] = []
        if not self.check(TokenType.RPAREN):
            while True:
                args.append(self.expression())
                if not self.accept(TokenType.COMMA):
                    break
        self.expect(TokenType.RPAREN)
        if len(args) != family.arity:
            raise ParseError(
                f"{family.value} takes {family.arity} parameter(s), got {len(args)}", token.loc
            )
        return DistributionSpec(family, tuple(args), loc=token.loc)

    def for_loop(self) -> ForLoop:
        loc = self.advance().loc
        if self.accept(TokenType.LPAREN):
            self.accept(TokenType.TYPE)
            var = self.expect(TokenType.IDENT, what='loop variable').text
            self.expect(TokenType.ASSIGN)
            start = self.expression()
            self.expect(TokenType.SEMICOLON)
            cond_var = self.expect(TokenType.IDENT, what='loop variable')
            if cond_var.text != var:
                raise ParseError(f"loop condition must test '{var}', found '{cond_var.text}'", cond_var.loc)
            comparison = self.expect(TokenType.OP, what="'<' or '<='")
            if comparison.text not in ('<', '<='):
                raise ParseError(f"loop condition must use '<' or '<=', found {comparison.text!r}", comparison.loc)
            stop = self.expression()
            self.expect(TokenType.SEMICOLON)
            step_var = self.expect(TokenType.IDENT, what='loop variable')
            if step_var.text != var:
                raise ParseError(f"loop step must update '{var}', found '{step_var.text}'", step_var.loc)
            step = self.expect(TokenType.INCREMENT, what="'++' or '+= 1'")
            if step.text == '+=':
                one = self.expect(TokenType.INT, what='1')
                if int(one.text) != 1:
                    raise ParseError("loop step must be 1", one.loc)
            self.expect(TokenType.RPAREN)
            inclusive = comparison.text == '<='
        else:
            var = self.expect(TokenType.IDENT, what='loop variable').text
            self.expect(TokenType.ASSIGN)
            start = self.expression()
            self.expect(TokenType.KEYWORD, 'to')
            stop = self.expression()
            self.expect(TokenType.KEYWORD, 'do')
            inclusive = True
        body = self.loop_body()
        return ForLoop(var, start, stop, inclusive, body, loc=loc)

    def loop_body(self) -> Tuple[Stmt, ...]:
        if self.accept(TokenType.LBRACE):
            statements: List[Stmt] = []
            while not self.accept(TokenType.RBRACE):
                if self.check(TokenType.EOF):
                    raise ParseError("unterminated loop body", self.current.loc)
                statements.append(self.statement())
            return tuple(statements)
        return (self.statement(),)

    # -- expressions --------------------------------------------------------

    def expression(self, min_precedence: int = 1) -> Expr:
        left = self.unary()
        while True:
            token = self.current
            op = BINARY_SYMBOLS.get(token.text) if token.type is TokenType.OP else None
            if op is None or PRECEDENCE[op] < min_precedence:
                return left
            self.advance()
            right = self.expression(PRECEDENCE[op] + 1)
            left = Binary(op, left, right, loc=token.loc)

    def unary(self) -> Expr:
        token = self.current
        if token.type is TokenType.OP and token.text in UNARY_SYMBOLS:
            self.advance()
            return Unary(UNARY_SYMBOLS[token.text], self.unary(), loc=token.loc)
        if token.type is TokenType.OP and token.text == '+':
            self.advance()
            return self.unary()
        return self.primary()

    def primary(self) -> Expr:
        self._reject_banned()
        token = self.current
        if token.type is TokenType.INT:
            self.advance()
            return Literal(int(token.text), ValueType.INT, loc=token.loc)
        if token.type is TokenType.REAL:
            self.advance()
            return Literal(float(token.text.rstrip('fFdD')), ValueType.REAL, loc=token.loc)
        if token.type is TokenType.BOOL:
            self.advance()
            return Literal(BOOL_LITERALS[token.text], ValueType.BOOL, loc=token.loc)
        if token.type is TokenType.LPAREN:
            self.advance()
            inner = self.expression()
            self.expect(TokenType.RPAREN)
            return inner
        if token.type is TokenType.DIST:
            raise ParseError(
                f"{token.text}(...) must be the whole right-hand side of an assignment", token.loc
            )
        if token.type is TokenType.IDENT:
            self.advance()
            if self.check(TokenType.LBRACKET):
                return self.index(token)
            if self.accept(TokenType.DOT):
                method = self.expect(TokenType.IDENT, what='GetLength')
                if method.text != 'GetLength':
                    raise ParseError(f"unsupported method '{method.text}': only GetLength(k) is available", method.loc)
                self.expect(TokenType.LPAREN)
                dim = self.expression()
                self.expect(TokenType.RPAREN)
                return GetLength(token.text, dim, loc=token.loc)
            if self.check(TokenType.LPAREN):
                raise ParseError(
                    f"function calls are not supported ('{token.text}(...)'): only distributions and GetLength",
                    token.loc,
                )
            return Name(token.text, loc=token.loc)
        raise ParseError(f"expected an expression, found {token.text or 'end of input'!r}", token.loc)

    def index(self, target: Token) -> Index:
        indices: List[Expr] = []
        while self.accept(TokenType.LBRACKET):
            while True:
                indices.append(self.expression())
                if not self.accept(TokenType.COMMA):
                    break
            self.expect(TokenType.RBRACKET)
        return Index(target.text, tuple(indices), loc=target.loc)
