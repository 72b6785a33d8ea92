"""Local trivializations T(λ): L²(E_λ, μ_λ) → L²(K, η₀) of the direct image.

With Φ^{-1}(λ, t) realized as a fiber chart ψ(λ, t) and a reference density
η₀(t) on the parameter box K,

    (T(λ) u)(t) = sqrt(w(λ, t)) · u(ψ(λ, t)),    w = area / (J∘ψ · η₀),

where w is the density of the pushed-forward fiber measure μ_λ relative to
η₀.  When the chart is normal (∂ψ/∂λ_a is the lift of ∂/∂l_a) T intertwines
the direct-image connection with ``X + Ã(X)`` where Ã(X) is multiplication
by ``A(X̌)∘ψ``.
"""
from __future__ import annotations

import numpy as np

from .direct_image import DirectImage, Section, cmatvec, evaluate_complex
from .expr_core import ComplexExpr, Expr, as_expr, diff, div, lambdify, mul, sqrt, var
from .fiber_quad import ChartError, FiberChart, QuadratureRule, directional_fd, fiber_nodes
from .geometry import Metric, VectorField
from .report import CheckReport, timed
from .submersion import Submersion


class BundleTrivialization:
    """Trivialization data: the chart ψ = Φ^{-1}(λ, ·) and the density η₀ on K.

    Parameters
    ----------
    chart : FiberChart
        ``Φ^{-1}`` as a λ-dependent fiber chart over the parameter box K.
    k_volume : Expr
        Density of η₀ in the t coordinates.
    """

    def __init__(self, chart: FiberChart, k_volume):
        self.chart = chart
        self.k_volume = as_expr(k_volume)

    def density(self, g: Metric, S: Submersion) -> Expr:
        """``w(λ, t) = area(λ, t) / (J(ψ(λ, t)) · η₀(t))``."""
        Jpsi = self.chart.pullback([S.j_density])[0]
        return div(self.chart.area_element(g), mul(Jpsi, self.k_volume))

    def sqrt_density(self, g, S) -> Expr:
        return sqrt(self.density(g, S))

    def apply_T(self, g, S, u: Section):
        """``(T u)(λ, t) = sqrt(w) · u(ψ(λ, t))`` as complex expressions over (l, t)."""
        sw = self.sqrt_density(g, S)
        pulled = []
        for z in u.components:
            re, im = self.chart.pullback([z.re, z.im])
            pulled.append(ComplexExpr(mul(sw, re), mul(sw, im)))
        return pulled

    def apply_T_values(self, g, S, u: Section, lam, tnodes) -> np.ndarray:
        """Values of ``T(λ) u`` at parameter columns ``tnodes``, shape (r, N)."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        x = lambdify(self.chart.map)(l=lam, t=tnodes)
        w = lambdify([self.density(g, S)])(l=lam, t=tnodes)[0]
        if np.any(~(w > 0)):
            raise ChartError("non-positive fiber density at a node")
        uv = evaluate_complex(list(u.components), x=x, l=lam)
        return np.sqrt(w) * uv

    def inverse_values(self, g, S, v: np.ndarray, lam, tnodes) -> np.ndarray:
        """``(T(λ)^{-1} v)(ψ(λ, t)) = v(t) / sqrt(w(λ, t))``."""
        w = lambdify([self.density(g, S)])(l=np.atleast_1d(lam), t=tnodes)[0]
        return v / np.sqrt(w)

    def k_weights(self, rule: QuadratureRule) -> np.ndarray:
        """Quadrature weights of η₀ on K."""
        eta0 = lambdify([self.k_volume])(t=rule.nodes)[0]
        return rule.weights * np.broadcast_to(eta0, rule.weights.shape)

    def tilde_A(self, bundle, S: Submersion, X: VectorField):
        """Multiplication field ``Ã(X) = A(X̌)∘ψ`` (rank x rank over (l, t))."""
        AX = bundle.connection_matrix(S.lift(X))
        return [[z.substitute({var("x", i): e for i, e in enumerate(self.chart.map)}) for z in row]
                for row in AX]

    def normality_defect(self, S: Submersion, lam_points, tnodes) -> float:
        """Max ``|∂ψ/∂λ_a − X̌_a(ψ)|``: zero iff the chart follows the normal lifts."""
        exprs = []
        for a in range(S.k):
            lifted = self.chart.pullback(S.lift_coordinate(a).components)
            for i, e in enumerate(self.chart.map):
                exprs.append(diff(e, var("l", a)) - lifted[i])
        worst = 0.0
        f = lambdify(exprs)
        for lam in lam_points:
            worst = max(worst, float(np.max(np.abs(f(l=np.atleast_1d(lam), t=tnodes)))))
        return worst


def unitarity_residual(triv, D: DirectImage, u: Section, rule: QuadratureRule, lam):
    """``(‖T(λ)u‖²_{L²(K,η₀)}, ‖u‖²_{μ_λ})``."""
    g, S = D.g, D.S
    Tu = triv.apply_T_values(g, S, u, lam, rule.nodes)
    lhs = float(np.dot(np.sum(np.abs(Tu) ** 2, axis=0), triv.k_weights(rule)))
    nodes = fiber_nodes(D.chart, g, S, rule, lam)
    uv = evaluate_complex(list(u.components), x=nodes.x, l=nodes.lam)
    rhs = float(np.dot(np.sum(np.abs(uv) ** 2, axis=0), nodes.mu))
    return lhs, rhs


def roundtrip_residual(triv, D: DirectImage, u: Section, lam, tnodes) -> float:
    """``max |T(λ)^{-1} T(λ) u − u|`` at ``ψ(λ, tnodes)``."""
    Tu = triv.apply_T_values(D.g, D.S, u, lam, tnodes)
    back = triv.inverse_values(D.g, D.S, Tu, lam, tnodes)
    x = lambdify(triv.chart.map)(l=np.atleast_1d(lam), t=tnodes)
    uv = evaluate_complex(list(u.components), x=x, l=np.atleast_1d(lam))
    return float(np.max(np.abs(back - uv))) if uv.size else 0.0


def intertwine_sides(triv, D: DirectImage, phi: Section, X: VectorField, lam, tnodes):
    """``(X(Tφ), T(∇_X φ) − Ã(X) Tφ)`` at parameter columns ``tnodes``.

    The left side is a Richardson-extrapolated centered difference in λ along
    X(λ) at fixed t.
    """
    g, S = D.g, D.S
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    Xl = lambdify(list(X.components))(l=lam)
    lhs = directional_fd(lambda L: triv.apply_T_values(g, S, phi, L, tnodes), lam, Xl)
    Tn = triv.apply_T_values(g, S, D.nabla(X, phi), lam, tnodes)
    Tphi = triv.apply_T_values(g, S, phi, lam, tnodes)
    At = triv.tilde_A(D.E, S, X)
    Av = evaluate_complex([z for row in At for z in row], l=lam, t=tnodes)
    r = D.E.rank
    Av = np.broadcast_to(Av, (r * r, tnodes.shape[1])).reshape(r, r, -1)
    rhs = Tn - np.einsum("abn,bn->an", Av, Tphi)
    return lhs, rhs


def intertwine_check(triv, D, phi, X, lam, tnodes, tol=1e-5, name="intertwining") -> CheckReport:
    with timed() as ms:
        lhs, rhs = intertwine_sides(triv, D, phi, X, lam, tnodes)
        err = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
        scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    return CheckReport(name, "trivialization intertwines the connection with X + Ã(X)",
                       scale, scale, err, tol, ms=ms[0],
                       note="value/oracle are max |T(∇φ) − Ã Tφ| over nodes")


def horizontal_inner_products(triv, D: DirectImage, u0, v0, lam_grid, rule: QuadratureRule):
    """``h(T*u0, T*v0)(λ)`` over the λ grid (flat bundle: these sections are horizontal).

    ``u0``, ``v0`` are lists of complex expressions over t (one per bundle rank).
    """
    if not D.E.is_flat:
        raise ValueError("horizontal sections via T* require a flat bundle")
    g, S = D.g, D.S
    u_vals = evaluate_complex(list(u0), t=rule.nodes)
    v_vals = evaluate_complex(list(v0), t=rule.nodes)
    n = rule.nodes.shape[1]
    u_vals = np.broadcast_to(u_vals, (len(u0), n))
    v_vals = np.broadcast_to(v_vals, (len(v0), n))
    out = []
    for lam in lam_grid:
        nodes = fiber_nodes(triv.chart, g, S, rule, lam)
        phi = triv.inverse_values(g, S, u_vals, lam, rule.nodes)
        psi = triv.inverse_values(g, S, v_vals, lam, rule.nodes)
        out.append(complex(np.dot(np.sum(phi * np.conj(psi), axis=0), nodes.mu)))
    return np.array(out)


def horizontal_constancy_check(triv, D, u0, v0, lam_grid, rule, tol=1e-8, oracle=None) -> CheckReport:
    with timed() as ms:
        h = horizontal_inner_products(triv, D, u0, v0, lam_grid, rule)
        mean = complex(np.mean(h))
        spread = float(np.max(np.abs(h - mean)))
    return CheckReport("horizontal inner-product constancy",
                       "inner products of horizontal sections are constant",
                       list(h.real), mean.real if oracle is None else oracle, spread, tol, ms=ms[0])


def k_pairing(triv, rule, f_vals, g_vals) -> complex:
    """``⟨f, g⟩_{L²(K, η₀)} = Σ f conj(g) η₀`` for values of shape (r, N)."""
    return complex(np.dot(np.sum(f_vals * np.conj(g_vals), axis=0), triv.k_weights(rule)))


def gauge_transition_sides(triv, D: DirectImage, phi: Section, X: VectorField, lam, tnodes, c: float):
    """Transition data between T_i = T and the gauge-rotated T_j = e^{icλ} T (k = 1).

    Returns ``(X(τ), τ Ã_i − Ã_j τ, τ Ã_i − Ã_i τ)`` at ``tnodes`` where
    ``τ = e^{icλ}``, Ã_i is the multiplication field of T and Ã_j is
    recovered numerically from ``X(T_j φ) = T_j(∇_X φ) − Ã_j T_j φ``.
    """
    if D.S.k != 1 or D.E.rank != 1:
        raise ValueError("gauge transition check needs k = 1 and a line bundle")
    g, S = D.g, D.S
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    Xl = lambdify(list(X.components))(l=lam)
    phase = lambda L: np.exp(1j * c * float(np.atleast_1d(L)[0]))  # noqa: E731
    Tj = lambda L: phase(L) * triv.apply_T_values(g, S, phi, L, tnodes)  # noqa: E731
    dTj = directional_fd(Tj, lam, Xl)[0]
    Tj_phi = Tj(lam)[0]
    Tj_nabla = phase(lam) * triv.apply_T_values(g, S, D.nabla(X, phi), lam, tnodes)[0]
    if np.min(np.abs(Tj_phi)) < 1e-8:
        raise ValueError("section vanishes at a node; Ã_j is not recoverable there")
    Aj = (Tj_nabla - dTj) / Tj_phi
    Ai = evaluate_complex([triv.tilde_A(D.E, S, X)[0][0]], l=lam, t=tnodes)[0]
    Ai = np.broadcast_to(Ai, Aj.shape)
    tau = phase(lam)
    dtau = directional_fd(lambda L: np.array([phase(L)]), lam, Xl)[0]
    return np.broadcast_to(dtau, Aj.shape), tau * Ai - Aj * tau, tau * Ai - Ai * tau


def gauge_transition_check(triv, D, phi, X, lam, tnodes, c, tol=1e-5, flag_threshold=1e-6) -> list:
    """Corrected transition relation (must hold) plus a flag on the as-printed form."""
    with timed() as ms:
        dtau, corrected, printed = gauge_transition_sides(triv, D, phi, X, lam, tnodes, c)
        err = float(np.max(np.abs(dtau - corrected)))
        bad = float(np.max(np.abs(dtau - printed)))
    ref = "transition of trivializations"
    return [
        CheckReport("transition relation from two trivializations", ref,
                    complex(dtau.flat[0]), complex(corrected.flat[0]), err, tol, ms=ms[0],
                    note=f"gauge phase exp(i·{c}·λ); value X(τ), oracle τÃ_i − Ã_jτ"),
        CheckReport.at_least("transition relation from two trivializations, as-printed form is nonzero",
                             ref, bad, flag_threshold,
                             note="flag only: the form with Ã_i on both sides does not vanish"),
    ]
