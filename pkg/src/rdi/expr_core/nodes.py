"""Immutable, hash-consed scalar expression DAG.

Every node is interned: building the same structure twice returns the same
object, so identity comparison is structural comparison and derivative /
substitution caches can be keyed on node identity.  Constructors apply a
conservative simplification (constant folding, 0/1 elimination, flattening
of sums and products, collection of like terms and like powers).
"""
from __future__ import annotations

import hashlib
import math
from typing import Iterable, Mapping

VAR_KINDS = ("x", "l", "t")  # ambient, base, fiber-parameter
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

_table: dict = {}


class Expr:
    """A node of the expression DAG.

    ``op`` is one of ``const``, ``var``, ``add``, ``mul``, ``pow`` or a
    unary function name.  Instances must be created through the module
    constructors (:func:`const`, :func:`var`, :func:`add`, ...).
    """

    __slots__ = ("op", "args", "value", "skey", "_free", "__weakref__")

    def __init__(self, op, args, value):
        self.op = op
        self.args = args
        self.value = value
        h = hashlib.blake2b(f"{op}|{value!r}|".encode(), digest_size=8)
        for a in args:
            h.update(a.skey.to_bytes(8, "little"))
        # structural sort key: operand order (and hence rounding) does not
        # depend on which expressions were built earlier in the process
        self.skey = int.from_bytes(h.digest(), "little")
        self._free = None

    def __setattr__(self, name, val):
        if name != "_free" and hasattr(self, "skey"):
            raise AttributeError("Expr is immutable")
        object.__setattr__(self, name, val)

    # arithmetic sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    def __reduce__(self):
        # structural, so unpickling re-interns the identical node
        return (_intern, (self.op, self.args, self.value))

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def free_vars(self) -> frozenset:
        """Set of ``(kind, index)`` pairs the expression depends on."""
        if self._free is None:
            stack = [(self, False)]
            while stack:
                node, expanded = stack.pop()
                if node._free is not None:
                    continue
                if node.op == "var":
                    node._free = frozenset([node.value])
                elif not node.args:
                    node._free = frozenset()
                elif expanded:
                    node._free = frozenset().union(*[a._free for a in node.args])
                else:
                    stack.append((node, True))
                    stack.extend((a, False) for a in node.args if a._free is None)
        return self._free


def _intern(op, args, value=None) -> Expr:
    key = (op, args, value)
    node = _table.get(key)
    if node is None:
        node = Expr(op, args, value)
        _table[key] = node
    return node


def const(value: float) -> Expr:
    value = float(value)
    if value == 0.0:
        value = 0.0  # fold -0.0
    return _intern("const", (), value)


ZERO = const(0.0)
ONE = const(1.0)


def var(kind: str, index: int) -> Expr:
    """Coordinate variable; ``index`` is 0-based (``var('x', 0)`` is x1)."""
    if kind not in VAR_KINDS:
        raise ValueError(f"unknown variable kind {kind!r}")
    if index < 0:
        raise ValueError("variable index must be non-negative")
    return _intern("var", (), (kind, int(index)))


def x(i: int) -> Expr:
    """Ambient coordinate x_i, 1-based."""
    return var("x", i - 1)


def l(i: int) -> Expr:  # noqa: E743
    """Base coordinate l_i, 1-based."""
    return var("l", i - 1)


def t(i: int) -> Expr:
    """Fiber-parameter coordinate t_i, 1-based."""
    return var("t", i - 1)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float)):
        return const(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


def _split_coeff(e: Expr):
    if e.op == "const":
        return e.value, ONE
    if e.op == "mul" and e.args[0].op == "const":
        rest = e.args[1:]
        return e.args[0].value, rest[0] if len(rest) == 1 else _intern("mul", rest)
    return 1.0, e


def _sorted(nodes):
    return tuple(sorted(nodes, key=lambda n: n.skey))


def add(*terms) -> Expr:
    coeffs: dict = {}
    order = []
    total = 0.0
    stack = [as_expr(a) for a in terms]
    flat = []
    while stack:
        a = stack.pop()
        if a.op == "add":
            stack.extend(a.args)
        else:
            flat.append(a)
    for a in flat:
        if a.op == "const":
            total += a.value
            continue
        c, rest = _split_coeff(a)
        if rest not in coeffs:
            coeffs[rest] = 0.0
            order.append(rest)
        coeffs[rest] += c
    parts = []
    for rest in order:
        c = coeffs[rest]
        if c == 0.0:
            continue
        parts.append(rest if c == 1.0 else mul(const(c), rest))
    if not parts:
        return const(total)
    args = _sorted(parts)
    if total != 0.0:
        args = (const(total),) + args
    if len(args) == 1:
        return args[0]
    return _intern("add", args)


def _split_power(e: Expr):
    if e.op == "pow" and e.args[1].op == "const":
        return e.args[0], e.args[1].value
    return e, 1.0


def mul(*factors) -> Expr:
    coeff = 1.0
    exps: dict = {}
    order = []
    stack = [as_expr(a) for a in factors]
    flat = []
    while stack:
        a = stack.pop()
        if a.op == "mul":
            stack.extend(a.args)
        else:
            flat.append(a)
    for a in flat:
        if a.op == "const":
            coeff *= a.value
            continue
        base, p = _split_power(a)
        if base not in exps:
            exps[base] = 0.0
            order.append(base)
        exps[base] += p
    if coeff == 0.0:
        return ZERO
    parts = []
    for base in order:
        p = exps[base]
        if p == 0.0:
            continue
        parts.append(base if p == 1.0 else _pow_raw(base, const(p)))
    if not parts:
        return const(coeff)
    # a product of a single sum by a constant is distributed so that like
    # terms keep collecting across nested linear combinations
    if coeff != 1.0 and len(parts) == 1 and parts[0].op == "add":
        return add(*[mul(const(coeff), a) for a in parts[0].args])
    args = _sorted(parts)
    if coeff != 1.0:
        args = (const(coeff),) + args
    if len(args) == 1:
        return args[0]
    return _intern("mul", args)


def neg(a: Expr) -> Expr:
    return mul(const(-1.0), a)


def sub(a, b) -> Expr:
    return add(as_expr(a), neg(as_expr(b)))


def div(a, b) -> Expr:
    return mul(as_expr(a), power(as_expr(b), const(-1.0)))


def _is_int(v: float) -> bool:
    return float(v).is_integer()


def _pow_raw(base: Expr, exp: Expr) -> Expr:
    return _intern("pow", (base, exp))


def power(base, exp) -> Expr:
    base, exp = as_expr(base), as_expr(exp)
    if exp.op == "const":
        p = exp.value
        if p == 0.0:
            return ONE
        if p == 1.0:
            return base
        if base.op == "const":
            try:
                v = base.value ** p
            except (OverflowError, ZeroDivisionError):
                return _pow_raw(base, exp)
            if isinstance(v, float) and math.isfinite(v):
                return const(v)
            return _pow_raw(base, exp)
        if base.op == "pow" and base.args[1].op == "const":
            q = base.args[1].value
            if _is_int(q) and _is_int(p):
                return power(base.args[0], const(p * q))
        if base.op == "sqrt" and _is_int(p) and p % 2 == 0:
            return power(base.args[0], const(p / 2))
        if base.op == "mul" and _is_int(p):
            return mul(*[power(f, exp) for f in base.args])
        return _pow_raw(base, exp)
    if base.op == "const" and base.value == 1.0:
        return ONE
    return _pow_raw(base, exp)


_FOLD = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}


def func(name: str, arg) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    arg = as_expr(arg)
    if arg.op == "const":
        try:
            v = _FOLD[name](arg.value)
        except (ValueError, OverflowError):
            v = None
        if v is not None and math.isfinite(v):
            return const(v)
    if name == "exp" and arg.op == "log":
        return arg.args[0]
    return _intern(name, (arg,))


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def exp(a) -> Expr:
    return func("exp", a)


def log(a) -> Expr:
    return func("log", a)


def sqrt(a) -> Expr:
    return func("sqrt", a)


# ---------------------------------------------------------------------------
# traversal


def toposort(roots: Iterable[Expr]) -> list:
    """Children-before-parents order of all nodes reachable from ``roots``."""
    seen = set()
    out = []
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                out.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in reversed(node.args):
                if id(child) not in seen:
                    stack.append((child, False))
    return out


def rebuild(node: Expr, args) -> Expr:
    """Re-apply the smart constructor of ``node`` to new children."""
    op = node.op
    if op == "add":
        return add(*args)
    if op == "mul":
        return mul(*args)
    if op == "pow":
        return power(args[0], args[1])
    if op in FUNCTIONS:
        return func(op, args[0])
    return node


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the simplifying constructors."""
    memo: dict = {}
    for node in toposort([e]):
        if node.args:
            memo[node] = rebuild(node, [memo[a] for a in node.args])
        else:
            memo[node] = node
    return memo[e]


def substitute(e: Expr, mapping: Mapping[Expr, Expr]) -> Expr:
    """Replace variables (keys of ``mapping``) by expressions."""
    return substitute_many([e], mapping)[0]


def substitute_many(exprs, mapping: Mapping[Expr, Expr]) -> list:
    memo: dict = {}
    for node in toposort(exprs):
        if node.op == "var":
            memo[node] = as_expr(mapping.get(node, node))
        elif node.args:
            new_args = [memo[a] for a in node.args]
            if all(na is a for na, a in zip(new_args, node.args)):
                memo[node] = node
            else:
                memo[node] = rebuild(node, new_args)
        else:
            memo[node] = node
    return [memo[e] for e in exprs]


# ---------------------------------------------------------------------------
# differentiation

_dcache: dict = {}


def diff(e: Expr, v: Expr) -> Expr:
    """Exact partial derivative of ``e`` with respect to the variable ``v``."""
    if v.op != "var":
        raise TypeError("can only differentiate with respect to a variable")
    key = v.value
    order = [n for n in toposort([e]) if (n, key) not in _dcache]
    for node in order:
        _dcache[(node, key)] = _diff_node(node, v, key)
    return _dcache[(e, key)]


def _d(node, key):
    return _dcache[(node, key)]


def _diff_node(node: Expr, v: Expr, key) -> Expr:
    op = node.op
    if key not in node.free_vars():
        return ZERO
    if op == "var":
        return ONE
    if op == "add":
        return add(*[_d(a, key) for a in node.args])
    if op == "mul":
        terms = []
        args = node.args
        for i, a in enumerate(args):
            da = _d(a, key)
            if da is ZERO:
                continue
            terms.append(mul(da, *(args[:i] + args[i + 1:])))
        return add(*terms)
    if op == "pow":
        b, p = node.args
        db, dp = _d(b, key), _d(p, key)
        if p.op == "const":
            return mul(p, power(b, const(p.value - 1.0)), db)
        return mul(node, add(mul(dp, log(b)), mul(p, db, power(b, const(-1.0)))))
    a = node.args[0]
    da = _d(a, key)
    if op == "sin":
        return mul(cos(a), da)
    if op == "cos":
        return neg(mul(sin(a), da))
    if op == "exp":
        return mul(node, da)
    if op == "log":
        return mul(da, power(a, const(-1.0)))
    if op == "sqrt":
        return mul(const(0.5), da, power(node, const(-1.0)))
    raise AssertionError(op)


# ---------------------------------------------------------------------------
# printing (output re-parses under the expression grammar)


def _num(v: float) -> str:
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _atom(node: Expr, s: str) -> str:
    if node.op == "var" or node.op in FUNCTIONS:
        return s
    if node.op == "const" and node.value >= 0:
        return s
    return f"({s})"


def to_string(e: Expr) -> str:
    memo: dict = {}
    for node in toposort([e]):
        memo[node] = _fmt(node, memo)
    return memo[e]


def _fmt(node: Expr, memo) -> str:
    op = node.op
    if op == "const":
        return _num(node.value)
    if op == "var":
        kind, i = node.value
        return f"{kind}{i + 1}"
    if op in FUNCTIONS:
        return f"{op}({memo[node.args[0]]})"
    if op == "pow":
        b, p = node.args
        return f"{_atom(b, memo[b])}^{_atom(p, memo[p])}"
    if op == "add":
        out = memo[node.args[0]]
        for a in node.args[1:]:
            c, rest = _split_coeff(a)
            if c < 0:
                body = _factor(rest, memo) if c == -1.0 else f"{_num(-c)}*{_factor(rest, memo)}"
                out += f" - {body}"
            else:
                out += f" + {memo[a]}"
        return out
    if op == "mul":
        args = node.args
        c = 1.0
        if args[0].op == "const":
            c = args[0].value
            args = args[1:]
        num, den = [], []
        for a in args:
            b, p = _split_power(a)
            if a.op == "pow" and p < 0:
                den.append(b if p == -1.0 else _pow_raw(b, const(-p)))
            else:
                num.append(a)
        body = "*".join(_factor(a, memo) for a in num) if num else "1"
        if den:
            bottom = "*".join(_factor(a, memo, wrap_mul=True) for a in den)
            if len(den) > 1:
                bottom = f"({bottom})"
            body = f"{body}/{bottom}"
        if c == 1.0:
            return body
        if c == -1.0:
            return f"-({body})"
        if not num:
            return f"{_num(c)}{body[1:]}"
        return f"{_num(c)}*{body}"
    raise AssertionError(op)


def _factor(node: Expr, memo, wrap_mul=False) -> str:
    s = memo[node] if node in memo else to_string(node)
    if node.op == "add":
        return f"({s})"
    if node.op == "const" and node.value < 0:
        return f"({s})"
    if node.op == "mul" and (wrap_mul or "/" in s or s.startswith("-")):
        return f"({s})"
    return s
