"""Numerical evaluation of expression DAGs.

Two evaluators are provided.  :func:`evaluate` walks the DAG with the
``math`` module and raises :class:`DomainError` naming the offending
subexpression.  :func:`lambdify` generates a straight-line numpy function
for a batch of expressions (shared subexpressions are computed once) and
falls back to the scalar walk to locate the culprit when a non-finite value
appears.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .nodes import FUNCTIONS, Expr, to_string, toposort


class DomainError(ArithmeticError):
    """Evaluation left the domain of log, sqrt, division or power."""

    def __init__(self, message: str, subexpr: Expr | None = None, point=None):
        self.subexpr = subexpr
        self.point = point
        text = message
        if subexpr is not None:
            text += f" in subexpression {to_string(subexpr)!r}"
        super().__init__(text)


def _coords(x, l, t):
    return {"x": tuple(() if x is None else x), "l": tuple(() if l is None else l),
            "t": tuple(() if t is None else t)}


def _lookup(coords, key):
    kind, i = key
    vals = coords[kind]
    if i >= len(vals):
        raise IndexError(f"no value supplied for {kind}{i + 1}")
    return float(vals[i])


def evaluate(e: Expr, x: Sequence[float] = (), l: Sequence[float] = (),
             t: Sequence[float] = ()) -> float:
    """Evaluate ``e`` at ambient point ``x``, base point ``l``, parameters ``t``.

    Raises
    ------
    DomainError
        If a log/sqrt argument, a division or a power leaves its domain, or
        an intermediate overflows.
    """
    return evaluate_many([e], x, l, t)[0]


def evaluate_many(exprs, x=(), l=(), t=()) -> list:
    coords = _coords(x, l, t)
    val: dict = {}
    for node in toposort(exprs):
        v = _eval_node(node, val, coords)
        if not math.isfinite(v):
            raise DomainError("non-finite value", node, coords)
        val[node] = v
    return [val[e] for e in exprs]


def _eval_node(node, val, coords) -> float:
    op = node.op
    if op == "const":
        return node.value
    if op == "var":
        return _lookup(coords, node.value)
    if op == "add":
        return math.fsum(val[a] for a in node.args)
    if op == "mul":
        p = 1.0
        for a in node.args:
            p *= val[a]
        return p
    if op == "pow":
        b, q = val[node.args[0]], val[node.args[1]]
        if b == 0.0 and q < 0:
            raise DomainError("division by zero", node, coords)
        if b < 0.0 and not float(q).is_integer():
            raise DomainError("negative base with fractional exponent", node, coords)
        try:
            return math.pow(b, q)
        except OverflowError:
            raise DomainError("overflow", node, coords) from None
    a = val[node.args[0]]
    if op == "log" and a <= 0.0:
        raise DomainError("log of non-positive value", node, coords)
    if op == "sqrt" and a < 0.0:
        raise DomainError("sqrt of negative value", node, coords)
    try:
        return _MATH[op](a)
    except (OverflowError, ValueError):
        raise DomainError(f"{op} out of range", node, coords) from None


_MATH = {"sin": math.sin, "cos": math.cos, "exp": math.exp,
         "log": math.log, "sqrt": math.sqrt}


# ---------------------------------------------------------------------------
# vectorized evaluation

_compiled: dict = {}


def _codegen(exprs):
    lines = ["def _f(x, l, t):"]
    names: dict = {}
    for k, node in enumerate(toposort(exprs)):
        name = f"v{k}"
        names[node] = name
        op = node.op
        if op == "const":
            rhs = repr(node.value)
        elif op == "var":
            kind, i = node.value
            rhs = f"{kind}[{i}]"
        elif op == "add":
            rhs = " + ".join(names[a] for a in node.args)
        elif op == "mul":
            rhs = " * ".join(names[a] for a in node.args)
        elif op == "pow":
            b, q = node.args
            if q.op == "const" and q.value == -1.0:
                rhs = f"1.0 / {names[b]}"
            elif q.op == "const" and q.value == 2.0:
                rhs = f"{names[b]} * {names[b]}"
            elif q.op == "const" and q.value == 0.5:
                rhs = f"_np.sqrt({names[b]})"
            else:
                rhs = f"_np.power({names[b]}, {names[q]})"
        elif op in FUNCTIONS:
            rhs = f"_np.{op}({names[node.args[0]]})"
        else:
            raise AssertionError(op)
        lines.append(f"    {name} = {rhs}")
    lines.append("    return (" + "".join(names[e] + ", " for e in exprs) + ")")
    namespace = {"_np": np}
    exec(compile("\n".join(lines), "<rdi-expr>", "exec"), namespace)  # noqa: S102
    return namespace["_f"]


def lambdify(exprs: Sequence[Expr]):
    """Compile a batch of expressions to a vectorized numpy function.

    The returned callable takes keyword arrays ``x``, ``l``, ``t`` whose
    first axis indexes coordinates; remaining axes broadcast.  It returns an
    array of shape ``(len(exprs),) + broadcast_shape``.
    """
    exprs = tuple(exprs)
    fn = _compiled.get(exprs)
    if fn is None:
        fn = _codegen(exprs)
        _compiled[exprs] = fn

    def call(x=(), l=(), t=()):
        xs = [np.asarray(v, dtype=float) for v in x]
        ls = [np.asarray(v, dtype=float) for v in l]
        ts = [np.asarray(v, dtype=float) for v in t]
        shape = np.broadcast_shapes(*[v.shape for v in xs + ls + ts]) if (xs or ls or ts) else ()
        with np.errstate(all="ignore"):
            try:
                raw = fn(xs, ls, ts)
            except IndexError:
                raise IndexError("missing coordinate values for expression") from None
        out = np.empty((len(exprs),) + shape)
        for k, r in enumerate(raw):
            out[k] = r
        if not np.all(np.isfinite(out)):
            _locate_failure(exprs, out, xs, ls, ts, shape)
        return out

    return call


def _locate_failure(exprs, out, xs, ls, ts, shape):
    bad = np.argwhere(~np.isfinite(out))[0]
    idx = tuple(bad[1:])

    def pick(vs):
        return [float(np.broadcast_to(v, shape)[idx]) for v in vs]

    x, l, t = pick(xs), pick(ls), pick(ts)
    evaluate(exprs[bad[0]], x, l, t)
    raise DomainError(f"non-finite value at x={x}, l={l}, t={t}", exprs[bad[0]])


def evaluate_array(e: Expr, x=(), l=(), t=()) -> np.ndarray:
    """Vectorized evaluation of a single expression."""
    return lambdify([e])(x, l, t)[0]
