"""Pratt parser for the expression grammar.

Grammar: identifiers ``[A-Za-z_][A-Za-z0-9_]*``; decimal and scientific
literals; binary ``+ - * / ^`` with the usual precedence, ``^``
right-associative; unary minus; ``f(expr)`` for the known functions;
parentheses.  Whitespace is insignificant.  Results are normalized trees.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .nodes import FUNCTIONS, Const, Expr, Symbol, add, func, mul, neg, power, MINUS_ONE


class ParseError(ValueError):
    """Syntax error with 1-based line/column and the set of tokens that would fit."""

    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        detail = ""
        if self.expected:
            detail = "; expected one of: " + ", ".join(sorted(self.expected))
        super().__init__(f"{message} at line {line}, column {column}{detail}")


class UnknownFunctionError(ParseError):
    pass


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_OPERAND_START = {"number", "identifier", "'('", "'-'"}
_INFIX = {"'+'", "'-'", "'*'", "'/'", "'^'"}

# binding powers
_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_MINUS_RBP = 25


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | op | end
    text: str
    line: int
    column: int


def tokenize(source: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1,
                             _OPERAND_START | _INFIX)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            for i, ch in enumerate(text):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("end", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list) -> None:
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, expected, token=None):
        t = token or self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"unexpected {what}", t.line, t.column, expected)

    def lbp(self) -> int:
        t = self.tok
        if t.kind == "op" and t.text in _LBP:
            return _LBP[t.text]
        return 0

    def expression(self, rbp: int = 0) -> Expr:
        left = self.nud(self.advance())
        while rbp < self.lbp():
            left = self.led(self.advance(), left)
        return left

    def nud(self, t: Token) -> Expr:
        if t.kind == "number":
            return Const(Fraction(t.text))
        if t.kind == "ident":
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {t.text!r}", t.line, t.column,
                                               sorted(FUNCTIONS))
                self.advance()
                arg = self.expression()
                self.expect(")")
                return func(t.text, arg)
            return Symbol(t.text)
        if t.kind == "op" and t.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if t.kind == "op" and t.text == "-":
            return neg(self.expression(_UNARY_MINUS_RBP))
        self.fail(_OPERAND_START, t)

    def led(self, t: Token, left: Expr) -> Expr:
        op = t.text
        if op == "^":
            return power(left, self.expression(_LBP["^"] - 1))
        right = self.expression(_LBP[op])
        if op == "+":
            return add(left, right)
        if op == "-":
            return add(left, neg(right))
        if op == "*":
            return mul(left, right)
        return mul(left, power(right, MINUS_ONE))

    def expect(self, text: str) -> None:
        if self.tok.kind == "op" and self.tok.text == text:
            self.advance()
            return
        self.fail({f"'{text}'"} | _INFIX)


def parse(source: str) -> Expr:
    """Parse ``source`` into a normalized expression tree."""
    tokens = tokenize(source)
    p = _Parser(tokens)
    if p.tok.kind == "end":
        p.fail(_OPERAND_START)
    e = p.expression()
    if p.tok.kind != "end":
        p.fail(_INFIX | {"end of input"})
    return e
