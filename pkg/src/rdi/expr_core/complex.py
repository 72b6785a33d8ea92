"""Complex-valued expressions as pairs of real expression DAGs."""
from __future__ import annotations

from dataclasses import dataclass

from . import nodes
from .nodes import ZERO, Expr, as_expr


@dataclass(frozen=True)
class ComplexExpr:
    """``re + i·im`` with both parts real :class:`Expr` nodes."""

    re: Expr
    im: Expr = ZERO

    @staticmethod
    def of(v) -> "ComplexExpr":
        if isinstance(v, ComplexExpr):
            return v
        if isinstance(v, complex):
            return ComplexExpr(nodes.const(v.real), nodes.const(v.imag))
        return ComplexExpr(as_expr(v), ZERO)

    def conj(self) -> "ComplexExpr":
        return ComplexExpr(self.re, nodes.neg(self.im))

    def __add__(self, other):
        o = ComplexExpr.of(other)
        return ComplexExpr(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = ComplexExpr.of(other)
        return ComplexExpr(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return ComplexExpr.of(other) - self

    def __mul__(self, other):
        o = ComplexExpr.of(other)
        if o.im is ZERO:
            return ComplexExpr(self.re * o.re, self.im * o.re)
        if self.im is ZERO:
            return ComplexExpr(self.re * o.re, self.re * o.im)
        return ComplexExpr(self.re * o.re - self.im * o.im,
                           self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __neg__(self):
        return ComplexExpr(nodes.neg(self.re), nodes.neg(self.im))

    def abs2(self) -> Expr:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re is ZERO and self.im is ZERO

    def diff(self, v: Expr) -> "ComplexExpr":
        return ComplexExpr(nodes.diff(self.re, v), nodes.diff(self.im, v))

    def substitute(self, mapping) -> "ComplexExpr":
        re, im = nodes.substitute_many([self.re, self.im], mapping)
        return ComplexExpr(re, im)

    def parts(self):
        return (self.re, self.im)

    def __str__(self):
        if self.im is ZERO:
            return str(self.re)
        return f"({self.re}) + i*({self.im})"


I = ComplexExpr(ZERO, nodes.ONE)
CZERO = ComplexExpr(ZERO, ZERO)
CONE = ComplexExpr(nodes.ONE, ZERO)


def flatten(zs):
    """Interleave real and imaginary parts for batch compilation."""
    out = []
    for z in zs:
        out.extend((z.re, z.im))
    return out


def unflatten(values):
    """Inverse of :func:`flatten` on evaluated arrays (first axis)."""
    return values[0::2] + 1j * values[1::2]
