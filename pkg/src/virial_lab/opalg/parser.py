"""Recursive-descent parser for the ASCII operator grammar.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" ["-"] INT)?
    atom   := INT ["/" INT] | ("x" | "p") "[" INT "," INT "]"
            | "hbar" | "lam" | "i" | NAME | "(" expr ")"

``NAME`` resolves through a caller-supplied macro table (e.g. ``G``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .expr import CanonicalFactor, Kind, OperatorExpr, add, mul, one
from .scalar import GaussianRational, ScalarCoeff

RESERVED = {"x", "p", "hbar", "lam", "i"}


class ExprSyntaxError(SyntaxError):
    """Malformed expression text; ``offset`` is the 0-based byte offset."""

    def __init__(self, msg: str, text: str, offset: int):
        super().__init__(f"{msg} at byte {offset}")
        self.text = text
        self.offset = offset


_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()\[\],]))")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "int", "name", "op", "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    try:
        text.encode("ascii")
    except UnicodeEncodeError as exc:
        raise ExprSyntaxError("non-ASCII character", text, len(text[: exc.start].encode())) from None
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


# -- parse tree ---------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    value: OperatorExpr

    def evaluate(self) -> OperatorExpr:
        return self.value


@dataclass(frozen=True)
class Sum:
    left: object
    right: object
    negate_right: bool = False

    def evaluate(self) -> OperatorExpr:
        r = self.right.evaluate()
        return add(self.left.evaluate(), -r if self.negate_right else r)


@dataclass(frozen=True)
class Product:
    left: object
    right: object

    def evaluate(self) -> OperatorExpr:
        return mul(self.left.evaluate(), self.right.evaluate())


@dataclass(frozen=True)
class Neg:
    operand: object

    def evaluate(self) -> OperatorExpr:
        return -self.operand.evaluate()


@dataclass(frozen=True)
class Power:
    base: object
    exponent: int
    pos: int

    def evaluate(self) -> OperatorExpr:
        b = self.base.evaluate()
        if self.exponent >= 0:
            out = one()
            for _ in range(self.exponent):
                out = mul(out, b)
            return out
        return _scalar_inverse(b, self.pos) ** (-self.exponent)


def _scalar_inverse(e: OperatorExpr, pos: int) -> OperatorExpr:
    terms = e.terms
    if len(terms) != 1:
        raise ExprSyntaxError("negative power of a non-monomial", "", pos)
    (mono, h, l), v = next(iter(terms.items()))
    if mono or h:
        raise ExprSyntaxError("negative power only allowed for numbers, i and lam", "", pos)
    return OperatorExpr({((), 0, -l): GaussianRational(1) / v})


class _Parser:
    def __init__(self, text: str, n_particles: int | None, macros: Mapping[str, OperatorExpr]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.n_particles = n_particles
        self.macros = macros

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise ExprSyntaxError(msg, self.text, tok.pos)

    def expect(self, op: str) -> _Tok:
        t = self.next()
        if t.kind != "op" or t.text != op:
            self.error(f"expected {op!r}", t)
        return t

    def parse(self):
        if self.peek().kind == "end":
            self.error("empty expression")
        node = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected token {self.peek().text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            node = Sum(node, self.term(), op == "-")
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text == "*":
            self.next()
            node = Product(node, self.unary())
        return node

    def unary(self):
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.next()
            inner = self.unary()
            return Neg(inner) if t.text == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            self.next()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "-":
                self.next()
                sign = -1
            n = self.next()
            if n.kind != "int":
                self.error("expected integer exponent", n)
            exp = sign * int(n.text)
            if exp < 0:
                # validate eagerly so the offset points at the exponent
                try:
                    _scalar_inverse(base.evaluate(), t.pos)
                except ExprSyntaxError as err:
                    raise ExprSyntaxError(str(err).rsplit(" at byte", 1)[0], self.text, t.pos) from None
            return Power(base, exp, t.pos)
        return base

    def _index(self) -> int:
        t = self.next()
        if t.kind != "int":
            self.error("expected integer index", t)
        return int(t.text)

    def atom(self):
        t = self.next()
        if t.kind == "int":
            num = int(t.text)
            if self.peek().kind == "op" and self.peek().text == "/":
                self.next()
                d = self.next()
                if d.kind != "int":
                    self.error("expected integer denominator", d)
                if int(d.text) == 0:
                    self.error("zero denominator", d)
                return Leaf(OperatorExpr.scalar(Fraction(num, int(d.text))))
            return Leaf(OperatorExpr.scalar(num))
        if t.kind == "name":
            if t.text in ("x", "p") and self.peek().kind == "op" and self.peek().text == "[":
                self.next()
                particle = self._index()
                self.expect(",")
                axis = self._index()
                self.expect("]")
                if self.n_particles is not None and particle > self.n_particles:
                    raise IndexError(f"particle {particle} out of range 1..{self.n_particles} (byte {t.pos})")
                kind = Kind.POSITION if t.text == "x" else Kind.MOMENTUM
                return Leaf(OperatorExpr.factor(CanonicalFactor(kind, particle, axis)))
            if t.text == "hbar":
                return Leaf(OperatorExpr.scalar(ScalarCoeff(GaussianRational(1), 1, 0)))
            if t.text == "lam":
                return Leaf(OperatorExpr.scalar(ScalarCoeff(GaussianRational(1), 0, 1)))
            if t.text == "i":
                return Leaf(OperatorExpr.scalar(GaussianRational(0, 1)))
            if t.text in self.macros:
                return Leaf(self.macros[t.text])
            self.error(f"unknown name {t.text!r}", t)
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.error("unexpected end of input" if t.kind == "end" else f"unexpected token {t.text!r}", t)


def parse_tree(text: str, n_particles: int | None = None, macros: Mapping[str, OperatorExpr] | None = None):
    """Raw (un-normal-ordered) parse tree; evaluate with ``normal_order``."""
    return _Parser(text, n_particles, macros or {}).parse()


def parse(text: str, n_particles: int | None = None, macros: Mapping[str, OperatorExpr] | None = None) -> OperatorExpr:
    """Parse ``text`` into its normal-ordered :class:`OperatorExpr`."""
    return parse_tree(text, n_particles, macros).evaluate()
