"""Hermitian bundles over M and the induced connection on fiberwise L² spaces.

Bundles are trivial of rank r with a connection given by m anti-Hermitian
matrices ``A_i = A(∂/∂x_i)`` of complex expressions.  For a submersion
ρ: M → N the direct-image connection on sections is

    ∇_X φ = ∇^E_{X̌} φ + ½ (div X̌ − (div X)∘ρ) φ,

and its curvature is the bundle curvature on lifted fields plus a first-order
term along the vertical part ``V = [X̌, Y̌] − [X, Y]ˇ`` of the lifted bracket,
which vanishes when the horizontal distribution is integrable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr_core import CZERO, ComplexExpr, ZERO, add, as_expr, diff, lambdify, mul, neg, var
from .expr_core.complex import flatten
from .fiber_quad import (
    FiberChart,
    directional_fd,
    evaluate_on_nodes,
    fiber_nodes,
)
from .geometry import Metric, VectorField, divergence, lie_bracket
from .report import CheckReport, timed
from .submersion import Submersion


class RankMismatch(ValueError):
    pass


# complex matrix helpers -----------------------------------------------------

def cmat(rows):
    return [[ComplexExpr.of(e) for e in row] for row in rows]


def cmatmul(a, b):
    return [[_csum(a[i][p] * b[p][j] for p in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def cmatvec(a, v):
    return [_csum(a[i][p] * v[p] for p in range(len(v))) for i in range(len(a))]


def cadd(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def csub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def cscale(c, a):
    return [[e * c for e in row] for row in a]


def dagger(a):
    return [[a[j][i].conj() for j in range(len(a))] for i in range(len(a[0]))]


def czeros(n, m):
    return [[CZERO] * m for _ in range(n)]


def _csum(terms):
    re, im = [], []
    for z in terms:
        re.append(z.re)
        im.append(z.im)
    return ComplexExpr(add(*re), add(*im))


def capply(Y: VectorField, z: ComplexExpr) -> ComplexExpr:
    return ComplexExpr(Y.apply(z.re), Y.apply(z.im))


def evaluate_complex(zs, **coords) -> np.ndarray:
    """Evaluate complex expressions; result has shape (len(zs), ...)."""
    v = lambdify(flatten(zs))(**coords)
    return v[0::2] + 1j * v[1::2]


# bundle ---------------------------------------------------------------------

@dataclass(frozen=True)
class Section:
    """Section of a trivial rank-r bundle: r complex component expressions."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(ComplexExpr.of(c) for c in self.components))

    @classmethod
    def zero(cls, rank: int) -> "Section":
        return cls((CZERO,) * rank)

    @property
    def rank(self) -> int:
        return len(self.components)

    def __add__(self, other: "Section") -> "Section":
        return Section(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "Section") -> "Section":
        return Section(tuple(a - b for a, b in zip(self.components, other.components)))

    def scale(self, c) -> "Section":
        return Section(tuple(z * c for z in self.components))

    def __iter__(self):
        return iter(self.components)


class HermitianBundle:
    """Trivial Hermitian bundle of rank ``rank`` over an m-dimensional M.

    Parameters
    ----------
    rank : int
    connection : list of m matrices (rank x rank) of ComplexExpr
        ``A_i = A(∂/∂x_i)``; anti-Hermitian pointwise.
    """

    def __init__(self, rank: int, connection):
        self.rank = int(rank)
        self.A = [cmat(a) for a in connection]
        self.m = len(self.A)
        for a in self.A:
            if len(a) != self.rank or any(len(row) != self.rank for row in a):
                raise RankMismatch("connection matrices must be rank x rank")

    @classmethod
    def flat(cls, rank: int, m: int) -> "HermitianBundle":
        return cls(rank, [czeros(rank, rank) for _ in range(m)])

    @property
    def is_flat(self) -> bool:
        return all(z.is_zero() for a in self.A for row in a for z in row)

    def connection_matrix(self, Y: VectorField):
        """``A(Y) = Σ_i Y^i A_i``."""
        out = czeros(self.rank, self.rank)
        for i, c in enumerate(Y.components):
            if c is ZERO:
                continue
            out = cadd(out, cscale(c, self.A[i]))
        return out

    def nabla_E(self, Y: VectorField, phi: Section) -> Section:
        """``∇^E_Y φ = Y(φ) + A(Y) φ``."""
        self._check(phi)
        AY = self.connection_matrix(Y)
        Aphi = cmatvec(AY, list(phi.components))
        return Section(tuple(capply(Y, z) + w for z, w in zip(phi.components, Aphi)))

    def curvature(self, U: VectorField, V: VectorField):
        """``R^E(U,V) = U(A(V)) − V(A(U)) + [A(U), A(V)] − A([U,V])``."""
        AU, AV = self.connection_matrix(U), self.connection_matrix(V)
        dAV = [[capply(U, z) for z in row] for row in AV]
        dAU = [[capply(V, z) for z in row] for row in AU]
        comm = csub(cmatmul(AU, AV), cmatmul(AV, AU))
        return csub(cadd(csub(dAV, dAU), comm), self.connection_matrix(lie_bracket(U, V)))

    def anti_hermitian_residual(self, points) -> float:
        zs = [self.A[i][a][b] + self.A[i][b][a].conj()
              for i in range(self.m) for a in range(self.rank) for b in range(self.rank)]
        if not zs:
            return 0.0
        return float(np.max(np.abs(evaluate_complex(zs, x=points))))

    def _check(self, phi: Section):
        if phi.rank != self.rank:
            raise RankMismatch(f"section of rank {phi.rank} on bundle of rank {self.rank}")


def pointwise_inner(phi: Section, psi: Section) -> ComplexExpr:
    """``h^E(φ, ψ) = Σ_a φ^a conj(ψ^a)``; antilinear in the second slot."""
    return _csum(a * b.conj() for a, b in zip(phi.components, psi.components))


# direct image ---------------------------------------------------------------

class DirectImage:
    """The field λ ↦ L²(E_λ, μ_λ) together with its connection."""

    def __init__(self, bundle: HermitianBundle, submersion: Submersion, chart: FiberChart | None = None):
        if bundle.m != submersion.m:
            raise RankMismatch("bundle and submersion live on different manifolds")
        self.E = bundle
        self.S = submersion
        self.g: Metric = submersion.g
        self.chart = chart

    def correction(self, X: VectorField):
        """``½ (div X̌ − (div X)∘ρ)``."""
        Xc = self.S.lift(X)
        return mul(0.5, add(divergence(Xc, self.g), neg(self.S.compose(divergence(X, self.S.zeta)))))

    def nabla(self, X: VectorField, phi: Section, correction: bool = True) -> Section:
        """``∇_X φ = ∇^E_{X̌} φ + ½(div X̌ − div X∘ρ) φ``."""
        out = self.E.nabla_E(self.S.lift(X), phi)
        if not correction:
            return out
        return out + phi.scale(self.correction(X))

    def inner_product(self, phi: Section, psi: Section, rule, lam) -> complex:
        """``h(φ,ψ)(λ) = ∫_{M_λ} h^E(φ,ψ) dμ_λ``."""
        nodes = fiber_nodes(self.chart, self.g, self.S, rule, lam)
        vals = evaluate_on_nodes(pointwise_inner(phi, psi), nodes)
        return complex(np.dot(vals, nodes.mu))

    def metric_compat(self, phi, psi, X, rule, lam, correction=True):
        """``(X h(φ,ψ) by finite differences, h(∇φ,ψ) + h(φ,∇ψ))``."""
        nodes = fiber_nodes(self.chart, self.g, self.S, rule, lam)
        d_phi = self.nabla(X, phi, correction)
        d_psi = self.nabla(X, psi, correction)
        rhs_f = pointwise_inner(d_phi, psi) + pointwise_inner(phi, d_psi)
        rhs = complex(np.dot(evaluate_on_nodes(rhs_f, nodes), nodes.mu))
        Xlam = lambdify(list(X.components))(l=np.atleast_1d(lam))
        lhs = directional_fd(lambda L: self.inner_product(phi, psi, rule, L), lam, Xlam)
        return complex(lhs), rhs

    def metric_compat_check(self, phi, psi, X, rule, lam, tol=1e-5,
                            name="metric compatibility") -> CheckReport:
        with timed() as ms:
            lhs, rhs = self.metric_compat(phi, psi, X, rule, lam)
        return CheckReport(name, "compatibility of the direct-image connection with h",
                           lhs, rhs, abs(lhs - rhs), tol, ms=ms[0])

    def curvature_sides(self, X: VectorField, Y: VectorField, phi: Section):
        """Symbolic ``(∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]})φ`` and ``R^E(X̌,Y̌)φ``."""
        lhs = (self.nabla(X, self.nabla(Y, phi)) - self.nabla(Y, self.nabla(X, phi))
               - self.nabla(lie_bracket(X, Y), phi))
        R = self.E.curvature(self.S.lift(X), self.S.lift(Y))
        rhs = Section(tuple(cmatvec(R, list(phi.components))))
        return lhs, rhs

    def vertical_bracket(self, X: VectorField, Y: VectorField) -> VectorField:
        """``V = [X̌, Y̌] − [X, Y]ˇ``, tangent to the fibers."""
        B = lie_bracket(self.S.lift(X), self.S.lift(Y))
        L = self.S.lift(lie_bracket(X, Y))
        return B - L

    def vertical_term(self, X: VectorField, Y: VectorField, phi: Section) -> Section:
        """``∇^E_V φ + ½ div(V) φ``: the curvature contribution of the vertical bracket."""
        V = self.vertical_bracket(X, Y)
        return self.E.nabla_E(V, phi) + phi.scale(mul(0.5, divergence(V, self.g)))

    def vertical_defect(self, X: VectorField, Y: VectorField, points) -> float:
        """Max ``|V|`` over ``points`` (zero iff the lifts close under brackets there)."""
        comps = list(self.vertical_bracket(X, Y).components)
        return float(np.max(np.abs(lambdify(comps)(x=points))))

    def curvature_full_check(self, X, Y, phi, points, tol=1e-9) -> CheckReport:
        """Curvature identity including the vertical bracket term; holds for every submersion."""
        with timed() as ms:
            lhs, rhs = self.curvature_sides(X, Y, phi)
            rhs = rhs + self.vertical_term(X, Y, phi)
            vals = evaluate_complex(list(lhs.components) + list(rhs.components), x=points)
            r = self.E.rank
            err = float(np.max(np.abs(vals[:r] - vals[r:])))
            scale = float(np.max(np.abs(vals[r:])))
        return CheckReport("curvature identity with vertical bracket term",
                           "curvature of the direct-image connection",
                           scale, scale, err, tol, ms=ms[0],
                           note=f"{points.shape[1]} points; oracle R^E(X̌,Y̌)φ + ∇^E_Vφ + ½div(V)φ")

    def curvature_check(self, X, Y, phi, points, tol=1e-9) -> CheckReport:
        """Max componentwise |Δ| of the curvature identity over ambient ``points``."""
        with timed() as ms:
            lhs, rhs = self.curvature_sides(X, Y, phi)
            vals = evaluate_complex(list(lhs.components) + list(rhs.components), x=points)
            r = self.E.rank
            a, b = vals[:r], vals[r:]
            err = float(np.max(np.abs(a - b)))
            scale = float(np.max(np.abs(b)))
        return CheckReport("curvature identity", "curvature of the direct-image connection",
                           scale, scale, err, tol, ms=ms[0],
                           note=f"{points.shape[1]} points; value/oracle are max |R^E(X̌,Y̌)φ|")


def max_abs_section(sec: Section, points) -> float:
    if not sec.components:
        return 0.0
    return float(np.max(np.abs(evaluate_complex(list(sec.components), x=points))))


def diff_section(sec: Section, v) -> Section:
    return Section(tuple(ComplexExpr(diff(z.re, v), diff(z.im, v)) for z in sec.components))


# Levi-Civita bundle -------------------------------------------------------------

def christoffel(g: Metric):
    """``Γ^l_{kj} = ½ g^{ls}(∂_k g_{sj} + ∂_j g_{sk} − ∂_s g_{kj})`` as ``G[l][k][j]``."""
    m = g.dim
    d = [[[diff(g.entries[a][b], var("x", c)) for c in range(m)] for b in range(m)] for a in range(m)]
    ginv = g.inverse
    out = []
    for lo in range(m):
        plane = []
        for k in range(m):
            row = []
            for j in range(m):
                row.append(mul(0.5, add(*[mul(ginv[lo][s], add(d[s][j][k], d[s][k][j], neg(d[k][j][s])))
                                          for s in range(m)])))
            plane.append(row)
        out.append(plane)
    return out


def levi_civita_bundle(g: Metric) -> HermitianBundle:
    """Complexified tangent bundle with the Levi-Civita connection in an orthonormal frame.

    For a diagonal metric the frame ``e_a = g_aa^{-1/2} ∂_a`` is orthonormal;
    with ``S = diag(g_aa^{-1/2})`` the coordinate-frame connection matrices
    ``(Γ_k)^l_j = Γ^l_{kj}`` become ``A_k = S^{-1}(Γ_k S + ∂_k S)``, which are
    antisymmetric exactly when the connection is metric.
    """
    from .expr_core import power
    from . import linalg

    m = g.dim
    ent = [list(r) for r in g.entries]
    if not linalg.is_diagonal(ent):
        raise ValueError("orthonormal-frame construction needs a diagonal metric")
    G = christoffel(g)
    s = [power(ent[a][a], -0.5) for a in range(m)]
    sinv = [power(ent[a][a], 0.5) for a in range(m)]
    A = []
    for k in range(m):
        mat = []
        for lo in range(m):
            row = []
            for j in range(m):
                e = mul(G[lo][k][j], s[j])
                if lo == j:
                    e = add(e, diff(s[j], var("x", k)))
                row.append(ComplexExpr(mul(sinv[lo], e), ZERO))
            mat.append(row)
        A.append(mat)
    return HermitianBundle(m, A)


def christoffel_compat_residual(g: Metric, points) -> float:
    """Max residual of ``∂_k g_ij = Γ^s_{ki} g_sj + Γ^s_{kj} g_is`` at ``points``."""
    G = christoffel(g)
    m = g.dim
    ent = g.entries
    exprs = []
    for k in range(m):
        for i in range(m):
            for j in range(m):
                rhs = add(*[add(mul(G[s][k][i], ent[s][j]), mul(G[s][k][j], ent[i][s])) for s in range(m)])
                exprs.append(add(diff(ent[i][j], var("x", k)), neg(rhs)))
    vals = lambdify(exprs)(x=points)
    return float(np.max(np.abs(vals)))


def real_section(exprs) -> Section:
    return Section(tuple(ComplexExpr(as_expr(e), ZERO) for e in exprs))
