"""Recursive-descent parser for the ASCII expression grammar.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := primary ('^' unary)?          (right associative)
    primary := number | name | name '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

from .expr import FUNCTIONS, KINDS, TAU, Const, Expr, Var, func

_SUFFIX_LEVEL = {"": 0, "_m": -1, "_mm": -2, "_p": 1, "_pp": 2}

JET_TOKENS = tuple(k + s for k in KINDS for s in ("", "_m", "_mm", "_p", "_pp"))
RESERVED = set(JET_TOKENS) | set(FUNCTIONS) | {"tau"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    """Syntax error at byte ``offset`` of the input."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int, valid: Iterable[str], text: str = ""):
        self.name = name
        self.valid = tuple(valid)
        ValueError.__init__(
            self, f"unknown identifier {name!r} at offset {offset}; valid names: {', '.join(self.valid)}"
        )
        self.offset = offset
        self.text = text


def jet_symbol(name: str):
    """Map a grammar token (``du_m``, ``t_pp``, ``tau``) to its Var/Const."""
    if name == "tau":
        return TAU
    for kind in sorted(KINDS, key=len, reverse=True):
        if name.startswith(kind) and name[len(kind):] in _SUFFIX_LEVEL:
            return Var(kind, _SUFFIX_LEVEL[name[len(kind):]])
    raise KeyError(name)


def _tokenize(text: str):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad), text)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, constants: Iterable[str]):
        self.text = text
        self.constants = set(constants)
        bad = self.constants & RESERVED
        if bad:
            raise ValueError(f"constant names clash with reserved tokens: {sorted(bad)}")
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok):
        return ParseError(msg, _byte_offset(self.text, tok[2]), self.text)

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {op!r}, found {found}", tok)
        return tok

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise self.error("empty expression", self.peek())
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}", tok)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                e = e * rhs
            else:
                if rhs.is_zero:
                    raise self.error("division by zero", tok)
                e = e / rhs
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            e = self.unary()
            return -e if tok[1] == "-" else e
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            etok = self.peek()
            exp = self.unary()
            if not exp.is_rational:
                raise self.error("exponent must be a rational constant", etok)
            q = exp.rational_value()
            if base.is_zero and q <= 0:
                raise self.error("zero raised to a non-positive power", tok)
            return base ** q
        return base

    def primary(self) -> Expr:
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Expr.const(Fraction(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(val, arg)
            if val in self.constants:
                return Expr.atom(Const(val))
            try:
                return Expr.atom(jet_symbol(val))
            except KeyError:
                pass
            valid = list(JET_TOKENS) + ["tau"] + sorted(self.constants)
            raise UnknownIdentifierError(val, _byte_offset(self.text, tok[2]), valid, self.text)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise self.error(f"unexpected {found}", tok)


def parse(text: str, constants: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into a canonical :class:`Expr`.

    ``constants`` lists user-declared symbolic constant names.
    """
    return _Parser(text, constants).parse()
