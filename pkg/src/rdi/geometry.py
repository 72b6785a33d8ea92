"""Riemannian structure on open subsets of R^m in a single global chart.

Metrics are symmetric matrices of expressions over the coordinates of one
kind (``'x'`` for the ambient manifold, ``'l'`` for the base).  The volume
density is ``+sqrt(det g)`` with orientation fixed by the coordinate order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from . import linalg
from .expr_core import ONE, ZERO, Expr, add, as_expr, diff, div, log, mul, neg, sqrt, var


class DimensionError(ValueError):
    pass


class Metric:
    """Riemannian metric ``g_ij`` on an open set of R^dim.

    Parameters
    ----------
    entries : sequence of sequences of Expr
        Symmetric ``dim x dim`` matrix.  Symmetry is checked structurally.
    kind : {'x', 'l'}
        Which coordinates the entries are expressed in.
    """

    def __init__(self, entries, kind: str = "x"):
        rows = [[as_expr(e) for e in row] for row in entries]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionError("metric must be square")
        for i in range(n):
            for j in range(i):
                if rows[i][j] is not rows[j][i]:
                    raise ValueError(f"metric is not symmetric at ({i + 1},{j + 1})")
        self.entries = tuple(tuple(r) for r in rows)
        self.kind = kind
        self.dim = n

    @classmethod
    def euclidean(cls, dim: int, kind: str = "x") -> "Metric":
        return cls(linalg.identity(dim), kind)

    @classmethod
    def conformal(cls, u: Expr, dim: int, kind: str = "x") -> "Metric":
        """The metric ``exp(2u)·δ``."""
        from .expr_core import exp

        f = exp(mul(2.0, u))
        return cls([[f if i == j else ZERO for j in range(dim)] for i in range(dim)], kind)

    @property
    def is_euclidean(self) -> bool:
        return all(self.entries[i][j] is (ONE if i == j else ZERO)
                   for i in range(self.dim) for j in range(self.dim))

    def coord(self, i: int) -> Expr:
        return var(self.kind, i)

    @cached_property
    def det(self) -> Expr:
        return linalg.det([list(r) for r in self.entries])

    @cached_property
    def inverse(self):
        m = [list(r) for r in self.entries]
        if linalg.is_diagonal(m):
            return [[div(1.0, m[i][i]) if i == j else ZERO for j in range(self.dim)]
                    for i in range(self.dim)]
        return linalg.inverse(m, self.det)

    @cached_property
    def volume_density(self) -> Expr:
        return ONE if self.is_euclidean else sqrt(self.det)

    @cached_property
    def log_density_gradient(self):
        """Components ``∂_i log sqrt(det g)``."""
        if self.is_euclidean:
            return [ZERO] * self.dim
        return [mul(0.5, div(diff(self.det, self.coord(i)), self.det)) for i in range(self.dim)]

    def inner(self, u, v) -> Expr:
        return add(*[mul(self.entries[i][j], u[i], v[j])
                     for i in range(self.dim) for j in range(self.dim)])


@dataclass(frozen=True)
class VectorField:
    """Contravariant vector field; ``kind`` names the coordinates it lives on."""

    components: tuple
    kind: str = "x"
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(as_expr(c) for c in self.components))
        object.__setattr__(self, "dim", len(self.components))

    @classmethod
    def coordinate(cls, i: int, dim: int, kind: str = "x") -> "VectorField":
        """The field ∂/∂(kind)_{i+1} (0-based ``i``)."""
        return cls(tuple(ONE if j == i else ZERO for j in range(dim)), kind)

    @classmethod
    def zero(cls, dim: int, kind: str = "x") -> "VectorField":
        return cls((ZERO,) * dim, kind)

    def apply(self, f: Expr) -> Expr:
        """Directional derivative ``Y(f) = Y^i ∂_i f``."""
        return add(*[mul(c, diff(f, var(self.kind, i)))
                     for i, c in enumerate(self.components) if c is not ZERO])

    def _check(self, other):
        if other.dim != self.dim or other.kind != self.kind:
            raise DimensionError("vector fields live on different spaces")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(tuple(add(a, b) for a, b in zip(self.components, other.components)),
                           self.kind)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(tuple(add(a, neg(b)) for a, b in zip(self.components, other.components)),
                           self.kind)

    def scale(self, a) -> "VectorField":
        a = as_expr(a)
        return VectorField(tuple(mul(a, c) for c in self.components), self.kind)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return self.dim


def _check_metric(Y: VectorField, g: Metric):
    if Y.dim != g.dim:
        raise DimensionError(f"field of dimension {Y.dim} vs metric of dimension {g.dim}")
    if Y.kind != g.kind:
        raise DimensionError("field and metric use different coordinates")


def gradient(f: Expr, g: Metric) -> VectorField:
    """Metric gradient ``(g^{-1})^{ij} ∂_j f``."""
    df = [diff(f, g.coord(j)) for j in range(g.dim)]
    return VectorField(tuple(linalg.matvec(g.inverse, df)), g.kind)


def divergence(Y: VectorField, g: Metric) -> Expr:
    """Divergence with respect to the Riemannian volume of ``g``.

    Computed as ``∂_i Y^i + Y^i ∂_i log sqrt(det g)``, which equals
    ``(1/sqrt(det g)) ∂_i (sqrt(det g) Y^i)`` without introducing square roots.
    """
    _check_metric(Y, g)
    terms = [diff(c, g.coord(i)) for i, c in enumerate(Y.components)]
    terms += [mul(c, h) for c, h in zip(Y.components, g.log_density_gradient)]
    return add(*terms)


def divergence_density(Y: VectorField, density: Expr) -> Expr:
    """Divergence with respect to ``density·dx``, ``(1/ρ) ∂_i(ρ Y^i)``."""
    return div(add(*[diff(mul(density, c), var(Y.kind, i))
                     for i, c in enumerate(Y.components)]), density)


def divergence_weighted(Y: VectorField, g: Metric, J: Expr) -> Expr:
    """Divergence with respect to ``J^{-1}·vol_g``: ``div(Y) − J^{-1}·Y(J)``."""
    J = as_expr(J)
    base = divergence(Y, g)
    if J.is_const:
        return base
    return add(base, neg(div(Y.apply(J), J)))


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]^i = X(Y^i) − Y(X^i)``."""
    X._check(Y)
    return VectorField(tuple(add(X.apply(b), neg(Y.apply(a)))
                             for a, b in zip(X.components, Y.components)), X.kind)


def log_density(g: Metric) -> Expr:
    return ZERO if g.is_euclidean else mul(0.5, log(g.det))
