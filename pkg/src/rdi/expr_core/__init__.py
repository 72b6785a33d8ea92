"""Symbolic scalar expressions: parse, differentiate, simplify, evaluate."""
from .complex import CONE, CZERO, I, ComplexExpr
from .evaluate import DomainError, evaluate, evaluate_array, evaluate_many, lambdify
from .nodes import (
    ONE,
    ZERO,
    Expr,
    add,
    as_expr,
    const,
    cos,
    diff,
    div,
    exp,
    l,
    log,
    mul,
    neg,
    power,
    simplify,
    sin,
    sqrt,
    sub,
    substitute,
    substitute_many,
    t,
    to_string,
    var,
    x,
)
from .parse import ArityError, ExprSyntaxError, ParseError, UnknownIdentifierError, parse

__all__ = [
    "ArityError", "CONE", "CZERO", "ComplexExpr", "DomainError", "Expr",
    "ExprSyntaxError", "I", "ONE", "ParseError", "UnknownIdentifierError",
    "ZERO", "add", "as_expr", "const", "cos", "diff", "div", "evaluate",
    "evaluate_array", "evaluate_many", "exp", "l", "lambdify", "log", "mul",
    "neg", "parse", "power", "simplify", "sin", "sqrt", "sub", "substitute",
    "substitute_many", "t", "to_string", "var", "x",
]
