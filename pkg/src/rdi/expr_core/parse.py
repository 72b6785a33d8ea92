"""Recursive-descent parser for the scalar expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' atom)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom

Identifiers are ``x<i>`` (ambient coordinate), ``l<j>`` (base coordinate),
``t<p>`` (fiber parameter) with 1-based indices, and the unary functions
``sin cos exp log sqrt``.  Note that ``-x1^2`` reads as ``(-x1)^2``: the
unary minus belongs to the atom, and the atom binds tighter than ``^``.
"""
from __future__ import annotations

import re

from . import nodes
from .nodes import FUNCTIONS, Expr

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)

_COORD = re.compile(r"([xlt])([0-9]+)$")


class ParseError(ValueError):
    """Base class for parser errors; ``offset`` is a 0-based byte offset."""

    kind = "parse error"

    def __init__(self, message: str, offset: int, src: str = ""):
        self.offset = offset
        self.src = src
        self.message = message
        super().__init__(f"{self.kind} at offset {offset}: {message}")


class ExprSyntaxError(ParseError):
    kind = "syntax error"


class UnknownIdentifierError(ParseError):
    kind = "unknown identifier"


class ArityError(ParseError):
    kind = "arity mismatch"


def _byte_offset(src: str, char_index: int) -> int:
    return len(src[:char_index].encode("utf-8"))


def tokenize(src: str):
    """List of ``(kind, text, char_index)``; ends with an ``eof`` token."""
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {src[pos]!r}", _byte_offset(src, pos), src
            )
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, dims):
        self.src = src
        self.tokens = tokenize(src)
        self.i = 0
        self.dims = dims

    # token helpers
    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def offset(self, tok) -> int:
        return _byte_offset(self.src, tok[2])

    def fail(self, cls, message, tok):
        raise cls(message, self.offset(tok), self.src)

    def expect(self, text):
        tok = self.peek()
        if tok[1] != text or tok[0] != "op":
            what = "end of input" if tok[0] == "eof" else repr(tok[1])
            self.fail(ExprSyntaxError, f"expected {text!r}, found {what}", tok)
        return self.advance()

    # grammar
    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            self.fail(ExprSyntaxError, f"unexpected {tok[1]!r}", tok)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            rhs = self.term()
            e = nodes.add(e, rhs) if op == "+" else nodes.sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            rhs = self.factor()
            e = nodes.mul(e, rhs) if op == "*" else nodes.div(e, rhs)
        return e

    def factor(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return nodes.power(base, self.atom())
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        kind, text = tok[0], tok[1]
        if kind == "number":
            self.advance()
            return nodes.const(float(text))
        if kind == "ident":
            self.advance()
            return self.ident(tok)
        if kind == "op" and text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "op" and text == "-":
            self.advance()
            return nodes.neg(self.atom())
        what = "end of input" if kind == "eof" else repr(text)
        self.fail(ExprSyntaxError, f"unexpected {what}", tok)

    def ident(self, tok) -> Expr:
        name = tok[1]
        nxt = self.peek()
        is_call = nxt[0] == "op" and nxt[1] == "("
        if name in FUNCTIONS:
            if not is_call:
                self.fail(ArityError, f"function {name!r} takes one argument", tok)
            self.advance()
            if self.peek()[0] == "op" and self.peek()[1] == ")":
                self.fail(ArityError, f"function {name!r} takes one argument", self.peek())
            arg = self.expr()
            if self.peek()[0] == "op" and self.peek()[1] == ",":
                self.fail(ArityError, f"function {name!r} takes one argument", self.peek())
            self.expect(")")
            return nodes.func(name, arg)
        m = _COORD.match(name)
        if m is None or int(m.group(2)) < 1:
            self.fail(UnknownIdentifierError, repr(name), tok)
        kind, index = m.group(1), int(m.group(2))
        limit = self.dims.get(kind)
        if limit is not None and index > limit:
            self.fail(UnknownIdentifierError, f"{name!r} (dimension is {limit})", tok)
        if is_call:
            self.fail(ArityError, f"coordinate {name!r} is not a function", nxt)
        return nodes.var(kind, index - 1)


def parse(src: str, ambient_dim: int | None = None, base_dim: int | None = None,
          fiber_dim: int | None = None) -> Expr:
    """Parse ``src`` into an :class:`Expr`.

    Optional dimensions restrict the admissible coordinate indices; an
    out-of-range coordinate is reported as an unknown identifier.

    Raises
    ------
    ExprSyntaxError, UnknownIdentifierError, ArityError
        All subclasses of :class:`ParseError`, carrying a byte ``offset``.
    """
    if not isinstance(src, str):
        raise TypeError("expression source must be a string")
    dims = {"x": ambient_dim, "l": base_dim, "t": fiber_dim}
    return _Parser(src, dims).parse()
