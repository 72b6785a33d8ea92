"""Submersions ρ: M → N with normal lifts, Jacobian density and divergences."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from . import linalg
from .expr_core import ZERO, Expr, add, as_expr, diff, div, lambdify, mul, neg, sqrt, substitute_many, var
from .geometry import DimensionError, Metric, VectorField, divergence, gradient


class RankError(ArithmeticError):
    """The Jacobian of the submersion is (numerically) rank deficient."""


class ProjectabilityError(ValueError):
    """A pushforward depends on the position inside a fiber."""


class Submersion:
    """``ρ = (ρ_1, ..., ρ_k)`` over ambient coordinates with metrics g on M, ζ on N.

    Parameters
    ----------
    components : sequence of Expr
        The k component functions, expressions in x1..xm.
    ambient_metric : Metric
        Metric on M (kind ``'x'``).
    base_metric : Metric, optional
        Metric on N (kind ``'l'``); Euclidean if omitted.
    """

    def __init__(self, components, ambient_metric: Metric, base_metric: Metric | None = None):
        self.components = tuple(as_expr(c) for c in components)
        self.k = len(self.components)
        self.m = ambient_metric.dim
        if self.k >= self.m:
            raise DimensionError("a submersion needs base dimension < ambient dimension")
        self.g = ambient_metric
        self.zeta = base_metric if base_metric is not None else Metric.euclidean(self.k, "l")
        if self.zeta.dim != self.k or self.zeta.kind != "l":
            raise DimensionError("base metric must be k-dimensional over l-coordinates")

    # symbolic data ------------------------------------------------------
    @cached_property
    def jacobian(self):
        """``G[a][i] = ∂ρ_a/∂x_i`` (k x m)."""
        return [[diff(r, var("x", i)) for i in range(self.m)] for r in self.components]

    @cached_property
    def gradients(self):
        """Metric gradients of the components as columns, ``g^{-1} G^T`` (m x k)."""
        cols = [gradient(r, self.g).components for r in self.components]
        return [list(row) for row in zip(*cols)]

    @cached_property
    def gram(self):
        """``G g^{-1} G^T`` (k x k)."""
        return linalg.matmul(self.jacobian, self.gradients)

    @cached_property
    def gram_det(self) -> Expr:
        return linalg.det(self.gram)

    @cached_property
    def gram_inverse(self):
        if self.k == 1:
            return [[div(1.0, self.gram[0][0])]]
        return linalg.inverse(self.gram, self.gram_det)

    @cached_property
    def lift_matrix(self):
        """``L = g^{-1} G^T (G g^{-1} G^T)^{-1}`` (m x k); column a is the lift of ∂/∂l_a."""
        return linalg.matmul(self.gradients, self.gram_inverse)

    @cached_property
    def j_density(self) -> Expr:
        """``J_ρ = sqrt(det(G g^{-1} G^T) · det ζ∘ρ)``."""
        d = self.gram_det
        if not self.zeta.is_euclidean:
            d = mul(d, self.compose(self.zeta.det))
        return sqrt(d)

    @cached_property
    def tangent_projector(self):
        """``P = I − L G``: g-orthogonal projection onto ker Dρ."""
        lg = linalg.matmul(self.lift_matrix, self.jacobian)
        ident = linalg.identity(self.m)
        return [[add(ident[i][j], neg(lg[i][j])) for j in range(self.m)] for i in range(self.m)]

    # maps ---------------------------------------------------------------
    def compose(self, e: Expr) -> Expr:
        """``e∘ρ``: replace base coordinates l_a by ρ_a."""
        return self.compose_many([e])[0]

    def compose_many(self, exprs):
        mapping = {var("l", a): r for a, r in enumerate(self.components)}
        return substitute_many(list(exprs), mapping)

    def pushforward(self, Y: VectorField) -> list:
        """``Dρ(Y)`` as k expressions over the ambient coordinates."""
        if Y.kind != "x" or Y.dim != self.m:
            raise DimensionError("pushforward needs an ambient field")
        return linalg.matvec(self.jacobian, list(Y.components))

    def lift(self, X: VectorField) -> VectorField:
        """Normal lift ``X̌ = L (X∘ρ)``: the unique g-normal field with Dρ(X̌) = X∘ρ."""
        if X.kind != "l" or X.dim != self.k:
            raise DimensionError("lift needs a base field")
        comp = self.compose_many(X.components)
        return VectorField(tuple(linalg.matvec(self.lift_matrix, comp)), "x")

    def lift_coordinate(self, a: int) -> VectorField:
        """Lift of ∂/∂l_{a+1}."""
        return VectorField(tuple(row[a] for row in self.lift_matrix), "x")

    def without(self, i: int) -> "Submersion":
        """The submersion with component ``i`` removed (Euclidean base)."""
        comps = self.components[:i] + self.components[i + 1:]
        return Submersion(comps, self.g)

    # projected-gradient constructions -------------------------------------------
    def _projected_gradient(self, i: int):
        """``π^i(∇ρ_i)``: g-orthogonal projection of ∇ρ_i off the other gradients."""
        grads = [[row[a] for row in self.gradients] for a in range(self.k)]
        v = grads[i]
        others = [grads[n] for n in range(self.k) if n != i]
        if not others:
            return v
        rest = self.without(i)
        # coefficients c = Gram_rest^{-1} (G_rest v)
        gv = linalg.matvec(rest.jacobian, v)
        c = linalg.matvec(rest.gram_inverse, gv)
        return [add(v[p], neg(add(*[mul(c[q], others[q][p]) for q in range(len(others))])))
                for p in range(self.m)]

    def lift_projected(self, i: int) -> VectorField:
        """``π^i(∇ρ_i)/‖π^i(∇ρ_i)‖²``, the projected-gradient form of the lift of ∂/∂l_i.

        Only valid for a Euclidean base.
        """
        if not self.zeta.is_euclidean:
            raise ValueError("projected-gradient lift requires a Euclidean base")
        p = self._projected_gradient(i)
        n2 = self.g.inner(p, p)
        return VectorField(tuple(div(c, n2) for c in p), "x")

    def projected_gradient_norm(self, i: int) -> Expr:
        p = self._projected_gradient(i)
        return sqrt(self.g.inner(p, p))

    def j_factorization(self, i: int):
        """``(J, J_i·‖π^i ∇ρ_i‖)`` with J_i the density of ρ without component i."""
        ji = self.without(i).j_density if self.k > 1 else as_expr(1.0)
        return self.j_density, mul(ji, self.projected_gradient_norm(i))

    # divergences ----------------------------------------------------------
    def base_divergence_composed(self, W) -> Expr:
        """``div_ζ(W)∘ρ`` for a projectable pushforward ``W`` given over x.

        Uses ``X̌_a(h∘ρ) = (∂_a h)∘ρ`` so no inverse of ρ is needed.
        """
        hz = self.compose_many(self.zeta.log_density_gradient)
        terms = []
        for a in range(self.k):
            terms.append(self.lift_coordinate(a).apply(W[a]))
            terms.append(mul(W[a], hz[a]))
        return add(*terms)

    def div_nu(self, Y: VectorField, points=None, tol: float = 1e-9) -> Expr:
        """``div_ν(Y) = div_η(Y) − div_ζ(Dρ Y)∘ρ``.

        If ``points`` (array of shape (m, N)) is given, the pushforward is
        checked to be constant along fibers there; otherwise the caller is
        responsible for projectability.
        """
        W = self.pushforward(Y)
        if points is not None:
            self.check_projectable(W, points, tol)
        return add(divergence(Y, self.g), neg(self.base_divergence_composed(W)))

    def check_projectable(self, W, points, tol: float = 1e-9):
        """Raise :class:`ProjectabilityError` if some ``W_a`` varies along a fiber."""
        P = self.tangent_projector
        exprs = []
        for w in W:
            dw = [diff(w, var("x", i)) for i in range(self.m)]
            # derivative of w along each projected basis direction
            exprs += [add(*[mul(dw[i], P[i][j]) for i in range(self.m)]) for j in range(self.m)]
        vals = lambdify(exprs)(x=points)
        worst = float(np.max(np.abs(vals))) if vals.size else 0.0
        if worst > tol:
            raise ProjectabilityError(
                f"pushforward varies along fibers (max derivative {worst:.3e})")

    # numerical checks ------------------------------------------------------
    def min_gram_singular_value(self, points) -> float:
        """Smallest singular value of the Gram matrix over sample points."""
        flat = [e for row in self.gram for e in row]
        vals = lambdify(flat)(x=points)
        n = vals.shape[1] if vals.ndim > 1 else 1
        mats = vals.reshape(self.k, self.k, n).transpose(2, 0, 1)
        return float(np.min(np.linalg.svd(mats, compute_uv=False)))

    def check_rank(self, points, threshold: float = 1e-8):
        s = self.min_gram_singular_value(points)
        if not s > threshold:
            raise RankError(f"Gram matrix singular value {s:.3e} below {threshold:.0e}")
        return s
