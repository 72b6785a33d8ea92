"""Fiber charts, induced fiber measures, and integrals over level sets.

A :class:`FiberChart` parameterizes ``M_λ = ρ^{-1}(λ)`` by a box of
parameters ``t``.  The induced Riemannian measure η_λ has density
``sqrt(det(Dψ^T g Dψ))`` in ``t``; the corrected measure is
``μ_λ = J^{-1} η_λ``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .expr_core import ComplexExpr, Expr, add, as_expr, diff, lambdify, mul, neg, sqrt, substitute_many, var
from .geometry import Metric, VectorField, divergence, divergence_density
from .report import CheckReport, timed
from .submersion import Submersion


class ChartError(ValueError):
    """The chart is degenerate (non-positive area element) at a node."""


@dataclass(frozen=True)
class AxisSpec:
    """One parameter axis: a closed interval or the periodic circle [a, a+2π)."""

    kind: str
    a: float = 0.0
    b: float = 2 * math.pi

    @classmethod
    def interval(cls, a: float, b: float) -> "AxisSpec":
        if not b > a:
            raise ValueError("interval must have b > a")
        return cls("interval", float(a), float(b))

    @classmethod
    def periodic(cls, a: float = 0.0) -> "AxisSpec":
        return cls("periodic", float(a), float(a) + 2 * math.pi)

    def rule(self, n: int):
        """Nodes and weights of an n-point rule on this axis."""
        if self.kind == "periodic":
            h = (self.b - self.a) / n
            return self.a + h * np.arange(n), np.full(n, h)
        if self.kind == "interval":
            return gauss_legendre(self.a, self.b, n)
        raise ValueError(f"unknown axis kind {self.kind!r}")


def gauss_legendre(a: float, b: float, n: int):
    """n-point Gauss-Legendre nodes and weights mapped to [a, b]."""
    z, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (z + 1.0), half * w


class QuadratureRule:
    """Tensor-product rule over a box of axes.

    Attributes
    ----------
    nodes : ndarray, shape (dim, N)
    weights : ndarray, shape (N,)
    """

    def __init__(self, axes, order: int):
        self.axes = tuple(axes)
        self.order = int(order)
        if self.order < 1:
            raise ValueError("quadrature order must be positive")
        per = [ax.rule(self.order) for ax in self.axes]
        grids = np.meshgrid(*[p[0] for p in per], indexing="ij")
        wgrids = np.meshgrid(*[p[1] for p in per], indexing="ij")
        self.nodes = np.array([g.ravel() for g in grids])
        self.weights = np.prod(np.array([w.ravel() for w in wgrids]), axis=0)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def integrate(self, values) -> float | complex:
        return np.dot(values, self.weights)


class FiberChart:
    """Parameterization ``ψ(λ, t)`` of the fibers.

    Parameters
    ----------
    mapping : sequence of Expr
        m expressions over base coordinates l1..lk and parameters t1..tp.
    domain : sequence of AxisSpec
        The parameter box (p = m − k axes).
    """

    def __init__(self, mapping, domain):
        self.map = tuple(as_expr(e) for e in mapping)
        self.domain = tuple(domain)
        self.param_dim = len(self.domain)
        self.m = len(self.map)
        self._area: dict = {}

    def t_vars(self):
        return [var("t", j) for j in range(self.param_dim)]

    def pullback(self, exprs):
        """Substitute ``x = ψ(λ, t)`` into ambient expressions."""
        mapping = {var("x", i): e for i, e in enumerate(self.map)}
        return substitute_many(list(exprs), mapping)

    @cached_property
    def param_jacobian(self):
        """``Dψ`` with respect to t (m x p)."""
        return [[diff(e, tv) for tv in self.t_vars()] for e in self.map]

    def induced_metric(self, g: Metric):
        gpsi = [self.pullback(row) for row in g.entries]
        D = self.param_jacobian
        return linalg.matmul(linalg.transpose(D), linalg.matmul(gpsi, D))

    def area_element(self, g: Metric) -> Expr:
        """``sqrt(det(Dψ^T g Dψ))`` over (λ, t)."""
        key = id(g)
        if key not in self._area:
            self._area[key] = (g, sqrt(linalg.det(self.induced_metric(g))))
        return self._area[key][1]

    def rule(self, order: int) -> QuadratureRule:
        return QuadratureRule(self.domain, order)

    def points(self, lam, tnodes) -> np.ndarray:
        """Ambient points ``ψ(λ, t)`` for parameter columns ``tnodes``."""
        return lambdify(self.map)(l=np.atleast_1d(lam), t=tnodes)

    def interior_samples(self, rng, n: int, margin: float = 0.05) -> np.ndarray:
        """Random parameter points inside the box, away from its boundary."""
        cols = []
        for ax in self.domain:
            w = ax.b - ax.a
            cols.append(rng.uniform(ax.a + margin * w, ax.b - margin * w, n))
        return np.array(cols)


@dataclass
class FiberNodes:
    """Quadrature data on one fiber."""

    lam: np.ndarray
    t: np.ndarray
    x: np.ndarray
    eta: np.ndarray
    J: np.ndarray

    @property
    def mu(self) -> np.ndarray:
        return self.eta / self.J


def fiber_nodes(chart: FiberChart, g: Metric, S: Submersion, rule: QuadratureRule, lam) -> FiberNodes:
    """Points, η_λ weights and J values at the nodes of ``rule`` on ``M_λ``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    t = rule.nodes
    x = lambdify(chart.map)(l=lam, t=t)
    area = lambdify([chart.area_element(g)])(l=lam, t=t)[0]
    if np.any(~(area > 0)):
        raise ChartError(f"degenerate chart: area element {np.min(area):.3e} at a node")
    J = lambdify([S.j_density])(x=x)[0]
    return FiberNodes(lam, t, x, rule.weights * area, J)


def evaluate_on_nodes(f, nodes: FiberNodes) -> np.ndarray:
    """Values of a real or complex ambient expression at the fiber nodes."""
    if isinstance(f, ComplexExpr):
        v = lambdify([f.re, f.im])(x=nodes.x, l=nodes.lam)
        return v[0] + 1j * v[1]
    return lambdify([as_expr(f)])(x=nodes.x, l=nodes.lam)[0]


def fiber_integral(chart, g, S, f, measure: str, rule: QuadratureRule, lam):
    """``∫_{M_λ} f dμ_λ`` (``measure='mu'``) or ``∫ f dη_λ`` (``'eta'``)."""
    nodes = fiber_nodes(chart, g, S, rule, lam)
    w = _measure_weights(nodes, measure)
    return np.dot(evaluate_on_nodes(f, nodes), w)


def _measure_weights(nodes: FiberNodes, measure: str) -> np.ndarray:
    if measure in ("mu", "mu_lambda"):
        return nodes.mu
    if measure in ("eta", "eta_lambda"):
        return nodes.eta
    raise ValueError(f"unknown measure {measure!r}")


def derivation_integrand(S: Submersion, f: Expr, X: VectorField) -> Expr:
    """``X̌(f) + (div X̌ − (div_ζ X)∘ρ)·f``."""
    Xc = S.lift(X)
    corr = add(divergence(Xc, S.g), neg(S.compose(divergence(X, S.zeta))))
    return add(Xc.apply(f), mul(corr, f))


def derivation_formula_rhs(chart, g, S, f: Expr, X: VectorField, rule, lam) -> float:
    """Quadrature value of ``∫_{M_λ} X̌(f) + (div X̌ − div X(λ)) f dμ_λ``."""
    return fiber_integral(chart, g, S, derivation_integrand(S, f, X), "mu", rule, lam)


def directional_fd(F, lam, direction, steps=(1e-3, 1e-4)):
    """Centered difference of ``F`` at ``lam`` along ``direction`` with Richardson extrapolation.

    ``D = (r² D(h2) − D(h1)) / (r² − 1)`` with ``r = h1/h2``.
    """
    lam = np.asarray(lam, dtype=float)
    v = np.asarray(direction, dtype=float)

    def central(h):
        return (F(lam + h * v) - F(lam - h * v)) / (2 * h)

    h1, h2 = steps
    r2 = (h1 / h2) ** 2
    return (r2 * central(h2) - central(h1)) / (r2 - 1.0)


def base_field_at(X: VectorField, lam) -> np.ndarray:
    return lambdify(list(X.components))(l=np.atleast_1d(lam))


def derivation_check(chart, g, S, f, X, order, lam, name="derivation formula",
                     ref="derivative of fiber integrals", tol_abs=1e-6, tol_rel=1e-4) -> CheckReport:
    """Compare the fiber-integral derivation formula with a finite difference of F."""
    with timed() as ms:
        rule = chart.rule(order)
        rhs = derivation_formula_rhs(chart, g, S, f, X, rule, lam)
        fd = directional_fd(lambda L: fiber_integral(chart, g, S, f, "mu", rule, L), lam,
                            base_field_at(X, lam))
    tol = max(tol_abs, tol_rel * abs(fd))
    return CheckReport(name, ref, rhs, fd, abs(rhs - fd), tol, ms=ms[0])


def convergence_gate(chart, g, S, f, order, lam, tol=1e-8) -> CheckReport:
    """Doubling the rule order must not change the fiber integral."""
    with timed() as ms:
        a = fiber_integral(chart, g, S, f, "mu", chart.rule(order), lam)
        b = fiber_integral(chart, g, S, f, "mu", chart.rule(2 * order), lam)
    return CheckReport("quadrature convergence", "fiber integral, rule-order doubling",
                       a, b, abs(a - b), tol * max(1.0, abs(b)), ms=ms[0])


# ---------------------------------------------------------------------------
# coarea


def integrate_region(mapping, nvars: int, axes, integrand: Expr, g: Metric, order: int,
                     kind: str = "t") -> float:
    """``∫ integrand dη`` over the image of a box under ``x = Ψ(u)``.

    ``mapping`` is m expressions over ``nvars`` variables of ``kind``; the
    volume factor is ``sqrt(det g)·|det DΨ|`` with DΨ evaluated numerically.
    """
    m = len(mapping)
    if nvars != m:
        raise ValueError("region chart must have as many variables as ambient dimensions")
    us = [var(kind, j) for j in range(nvars)]
    rule = QuadratureRule(axes, order)
    args = {kind: rule.nodes}
    x = lambdify(list(mapping))(**args)
    D = lambdify([diff(e, u) for e in mapping for u in us])(**args)
    D = D.reshape(m, m, -1).transpose(2, 0, 1)
    jac = np.abs(np.linalg.det(D))
    vals = lambdify([integrand, g.volume_density])(x=x)
    return float(np.dot(vals[0] * vals[1] * jac, rule.weights))


def _split_chart_axes(chart: FiberChart, base_box):
    return [AxisSpec.interval(a, b) for a, b in base_box] + list(chart.domain)


def coarea_check(chart: FiberChart, g: Metric, S: Submersion, f: Expr, base_box, order: int,
                 region=None, oracle=None, rel_tol=1e-6, abs_tol=None) -> CheckReport:
    """Coarea identity ``∫_M f J dη = ∫_N (∫_{M_λ} f dη_λ) dζ``.

    The left side is a direct m-dimensional quadrature, either over an
    independent ``region`` chart ``(mapping over t1..tm, axes)`` or over the
    full change of variables ``(λ, t) ↦ ψ(λ, t)`` whose volume factor is the
    full m x m Jacobian determinant (not the fiber area element).  The right
    side nests fiber integrals inside a Gauss rule on the base box.
    """
    with timed() as ms:
        f = as_expr(f)
        integrand = mul(f, S.j_density)
        if region is not None:
            mapping, axes = region
            lhs = integrate_region(mapping, len(mapping), axes, integrand, g, order)
        else:
            lhs = _direct_over_chart(chart, g, integrand, base_box, order)
        rhs = _nested(chart, g, S, f, base_box, order)
    ref = oracle if oracle is not None else lhs
    err = max(abs(lhs - ref), abs(rhs - ref)) if oracle is not None else abs(lhs - rhs)
    tol = abs_tol if abs_tol is not None else rel_tol * max(1.0, abs(ref))
    return CheckReport("coarea formula", "coarea formula for submersions", [lhs, rhs], ref,
                       err, tol, ms=ms[0])


def _direct_over_chart(chart, g, integrand, base_box, order):
    k = len(base_box)
    axes = _split_chart_axes(chart, base_box)
    # rename base coordinates l_a -> t_a and parameters t_j -> t_{k+j}
    shift = {var("t", j): var("t", k + j) for j in range(chart.param_dim)}
    shifted = substitute_many(list(chart.map), shift)
    ren = {var("l", a): var("t", a) for a in range(k)}
    mapping = substitute_many(shifted, ren)
    return integrate_region(mapping, len(mapping), axes, integrand, g, order)


def _nested(chart, g, S, f, base_box, order):
    base_rule = QuadratureRule([AxisSpec.interval(a, b) for a, b in base_box], order)
    rule = chart.rule(order)
    zeta_density = lambdify([S.zeta.volume_density])(l=base_rule.nodes)[0]
    zeta_density = np.broadcast_to(zeta_density, base_rule.weights.shape)
    total = 0.0
    for idx in range(base_rule.nodes.shape[1]):
        lam = base_rule.nodes[:, idx]
        inner = fiber_integral(chart, g, S, f, "eta", rule, lam)
        total += inner * zeta_density[idx] * base_rule.weights[idx]
    return float(total)


# ---------------------------------------------------------------------------
# fiber divergence of tangent fields


def fiber_divergence(chart: FiberChart, g: Metric, S: Submersion, Y: VectorField):
    """Divergence of a fiber-tangent field with respect to μ_λ, computed in the chart.

    Returns an expression over (λ, t): ``(1/w) ∂_{t_j}(w c^j)`` where
    ``c = (Dψ^T g Dψ)^{-1} Dψ^T g Y`` are the chart components of ``Y`` and
    ``w = area/J`` is the μ_λ density.
    """
    D = chart.param_jacobian
    h = chart.induced_metric(g)
    gpsi = [chart.pullback(row) for row in g.entries]
    Ypsi = chart.pullback(Y.components)
    rhs = linalg.matvec(linalg.transpose(D), linalg.matvec(gpsi, Ypsi))
    if chart.param_dim == 1:
        c = [mul(rhs[0], as_expr(1.0) / h[0][0])]
    else:
        c = linalg.matvec(linalg.inverse(h), rhs)
    w = chart.area_element(g) / chart.pullback([S.j_density])[0]
    comp = VectorField(tuple(c), "t")
    return divergence_density(comp, w)


def tangent_part(S: Submersion, Z: VectorField) -> VectorField:
    """g-orthogonal projection of ``Z`` onto the fiber tangent spaces."""
    return VectorField(tuple(linalg.matvec(S.tangent_projector, list(Z.components))), "x")
