"""Dense symbolic matrices (lists of lists of Expr) of desk-scale size."""
from __future__ import annotations

from .expr_core import ONE, ZERO, add, as_expr, div, mul, neg


def zeros(n: int, m: int):
    return [[ZERO] * m for _ in range(n)]


def identity(n: int):
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def transpose(a):
    return [list(col) for col in zip(*a)]


def matmul(a, b):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    if a and len(a[0]) != k:
        raise ValueError("matrix dimension mismatch")
    return [[add(*[mul(a[i][p], b[p][j]) for p in range(k)]) for j in range(m)]
            for i in range(n)]


def matvec(a, v):
    if a and len(a[0]) != len(v):
        raise ValueError("matrix dimension mismatch")
    return [add(*[mul(row[p], v[p]) for p in range(len(v))]) for row in a]


def minor(a, i: int, j: int):
    return [row[:j] + row[j + 1:] for k, row in enumerate(a) if k != i]


def det(a):
    """Laplace expansion along the first row (n ≤ 4 in practice)."""
    n = len(a)
    if n == 0:
        return ONE
    if n == 1:
        return as_expr(a[0][0])
    if n == 2:
        return add(mul(a[0][0], a[1][1]), neg(mul(a[0][1], a[1][0])))
    terms = []
    for j in range(n):
        if a[0][j] is ZERO:
            continue
        sub = det(minor(a, 0, j))
        term = mul(a[0][j], sub)
        terms.append(term if j % 2 == 0 else neg(term))
    return add(*terms)


def adjugate(a):
    n = len(a)
    if n == 1:
        return [[ONE]]
    return [[det(minor(a, j, i)) if (i + j) % 2 == 0 else neg(det(minor(a, j, i)))
             for j in range(n)] for i in range(n)]


def inverse(a, d=None):
    """Symbolic inverse via the adjugate; ``d`` may supply a cached determinant."""
    d = det(a) if d is None else d
    adj = adjugate(a)
    return [[div(e, d) for e in row] for row in adj]


def is_diagonal(a) -> bool:
    return all(a[i][j] is ZERO for i in range(len(a)) for j in range(len(a)) if i != j)
