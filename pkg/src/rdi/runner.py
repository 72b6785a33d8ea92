"""Check orchestration for one scenario."""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, replace

import numpy as np

from . import op_fields as opf
from .direct_image import (
    DirectImage,
    HermitianBundle,
    Section,
    christoffel_compat_residual,
    evaluate_complex,
    pointwise_inner,
)
from .expr_core import (
    CONE,
    ONE,
    ZERO,
    ComplexExpr,
    DomainError,
    add,
    const,
    cos,
    diff,
    lambdify,
    mul,
    neg,
    parse,
    sin,
    sqrt,
    var,
)
from .expr_core import div as ediv
from .fiber_quad import (
    ChartError,
    coarea_check,
    convergence_gate,
    derivation_check,
    derivation_formula_rhs,
    fiber_divergence,
    fiber_integral,
    tangent_part,
)
from .geometry import VectorField, divergence, divergence_density, divergence_weighted, lie_bracket
from .report import CheckReport, timed
from .scenario import Scenario
from .submersion import ProjectabilityError, RankError
from .trivialization import (
    gauge_transition_check,
    horizontal_constancy_check,
    intertwine_check,
    k_pairing,
    roundtrip_residual,
    unitarity_residual,
)


@dataclass
class RunOptions:
    quad_order: int | None = None
    tol: float | None = None
    timings: bool = False
    n_points: int = 60


_FAILURES = (DomainError, ChartError, RankError, ProjectabilityError, ArithmeticError, ValueError)


class ScenarioRunner:
    """Runs the full check suite of a scenario in declaration order."""

    def __init__(self, scenario: Scenario, options: RunOptions | None = None):
        self.sc = scenario
        self.opt = options or RunOptions()
        self.reports: list[CheckReport] = []
        self.rng = np.random.default_rng(scenario.seed)
        self.order = self.opt.quad_order or scenario.quad_order
        self.S = scenario.submersion
        self.g = scenario.metric
        self.chart = scenario.chart
        self.D = DirectImage(scenario.bundle, self.S, self.chart)
        grid = np.array(scenario.lambda_grid)
        self.lam_lo, self.lam_hi = grid.min(axis=0), grid.max(axis=0)
        self.lam_mid = scenario.lambda_grid[len(scenario.lambda_grid) // 2]
        self._sample()

    # helpers ---------------------------------------------------------------
    def tol(self, name: str, default: float) -> float:
        if self.opt.tol is not None:
            return self.opt.tol
        return self.sc.tolerances.get(name, default)

    def add(self, rep: CheckReport):
        if not self.opt.timings:
            rep.ms = 0.0
        self.reports.append(rep)

    def residual(self, name, ref, err, default_tol, value=None, oracle=None, ms=0.0, note=""):
        self.add(CheckReport(name, ref, err if value is None else value, 0.0 if oracle is None else oracle,
                             err, self.tol(name, default_tol), ms=ms, note=note))

    @contextmanager
    def guard(self, name: str, ref: str):
        try:
            yield
        except _FAILURES as e:
            self.add(CheckReport.failure(name, ref, f"{type(e).__name__}: {e}"))

    def _sample(self):
        n = self.opt.n_points
        k = self.sc.k
        lam = np.array([self.rng.uniform(self.lam_lo[a], self.lam_hi[a], n) for a in range(k)])
        if np.allclose(self.lam_lo, self.lam_hi):
            lam = np.repeat(self.lam_lo[:, None], n, axis=1)
        t = self.chart.interior_samples(self.rng, n)
        self.lam_pts, self.t_pts = lam, t
        self.x_pts = lambdify(self.chart.map)(l=lam, t=t)
        self.t_nodes = self.chart.interior_samples(self.rng, 20)

    def max_abs(self, exprs, complex_=False, **coords) -> float:
        exprs = list(exprs)
        if not exprs:
            return 0.0
        coords = coords or {"x": self.x_pts}
        if complex_:
            return float(np.max(np.abs(evaluate_complex(exprs, **coords))))
        return float(np.max(np.abs(lambdify(exprs)(**coords))))

    def random_poly_x(self, degree=2, scale=0.5):
        m = self.sc.m
        terms = [self.rng.normal() * scale]
        for i in range(m):
            terms.append(mul(self.rng.normal() * scale, var("x", i)))
            if degree >= 2:
                for j in range(i, m):
                    terms.append(mul(self.rng.normal() * scale, var("x", i), var("x", j)))
        return add(*terms)

    def random_field_x(self) -> VectorField:
        return VectorField(tuple(self.random_poly_x() for _ in range(self.sc.m)), "x")

    def random_section(self) -> Section:
        sf = self.sc.support_factor or ONE
        return Section(tuple(ComplexExpr(mul(sf, self.random_poly_x()), mul(sf, self.random_poly_x()))
                             for _ in range(self.sc.bundle.rank)))

    # suite -------------------------------------------------------------------
    def run(self) -> list:
        if not self.preconditions():
            return self.reports
        self.lift_suite()
        self.divergence_suite()
        self.quadrature_suite()
        self.coarea()
        self.connection_suite()
        self.curvature_suite()
        self.trivialization_suite()
        self.operator_suite()
        return self.reports

    def preconditions(self) -> bool:
        ref = "standing assumptions"
        with self.guard("precondition: rank of the differential", ref):
            s = self.S.min_gram_singular_value(self.x_pts)
            self.add(CheckReport.at_least("precondition: rank of the differential", ref, s, 1e-8))
        with self.guard("precondition: chart lies on fibers", ref):
            res = [add(r, neg(var("l", a))) for a, r in enumerate(self.chart.pullback(self.S.components))]
            err = self.max_abs(res, l=self.lam_pts, t=self.t_pts)
            self.residual("precondition: chart lies on fibers", ref, err, 1e-12)
        with self.guard("precondition: metric positive definite", ref):
            flat = [e for row in self.g.entries for e in row]
            vals = lambdify(flat)(x=self.x_pts)
            m = self.sc.m
            mats = np.broadcast_to(vals.reshape(m, m, -1), (m, m, self.x_pts.shape[1])).transpose(2, 0, 1)
            ev = float(np.min(np.linalg.eigvalsh(mats)))
            self.add(CheckReport.at_least("precondition: metric positive definite", ref, ev, 1e-12))
        with self.guard("precondition: connection is anti-Hermitian", ref):
            err = self.sc.bundle.anti_hermitian_residual(self.x_pts)
            self.residual("precondition: connection is anti-Hermitian", ref, err, 1e-12)
        ok = all(r.passed for r in self.reports)
        return ok

    def lift_suite(self):
        S, pts = self.S, self.x_pts
        ref = "normal lift of base vector fields"
        for n, X in enumerate(self.sc.base_fields):
            name = f"lift pushes forward to X[{n}]"
            with self.guard(name, ref):
                Xc = S.lift(X)
                push = S.pushforward(Xc)
                target = S.compose_many(X.components)
                err = self.max_abs([add(p, neg(q)) for p, q in zip(push, target)])
                self.residual(name, ref, err, 1e-12)
            name = f"lift is normal to fibers, X[{n}]"
            with self.guard(name, ref):
                P = S.tangent_projector
                cols = [[P[i][j] for i in range(self.sc.m)] for j in range(self.sc.m)]
                err = self.max_abs([self.g.inner(Xc.components, c) for c in cols])
                self.residual(name, ref, err, 1e-10)
        ref = "Jacobian density of the submersion"
        with self.guard("Jacobian density positive", ref):
            jmin = float(np.min(lambdify([S.j_density])(x=pts)[0]))
            self.add(CheckReport.at_least("Jacobian density positive", ref, jmin, 1e-12))
        if self.sc.k == 1 and self.g.is_euclidean and S.zeta.is_euclidean:
            with self.guard("Jacobian density equals gradient norm", ref):
                grad = [diff(S.components[0], var("x", i)) for i in range(self.sc.m)]
                err = self.max_abs([add(S.j_density, neg(sqrt(add(*[mul(c, c) for c in grad]))))])
                self.residual("Jacobian density equals gradient norm", ref, err, 1e-12)
        if S.zeta.is_euclidean:
            ref2 = "lift via projected gradients"
            for a in range(self.sc.k):
                name = f"projected-gradient lift agrees, l{a + 1}"
                with self.guard(name, ref2):
                    u, v = S.lift_coordinate(a), S.lift_projected(a)
                    err = self.max_abs([add(p, neg(q)) for p, q in zip(u, v)])
                    self.residual(name, ref2, err, 1e-10)
            if self.sc.k >= 2:
                for a in range(self.sc.k):
                    name = f"Jacobian density factorization, i={a + 1}"
                    with self.guard(name, ref2):
                        J, F = S.j_factorization(a)
                        self.residual(name, ref2, self.max_abs([add(J, neg(F))]), 1e-10)

    def divergence_suite(self):
        S, g = self.S, self.g
        Z = self.random_field_x()
        ref = "divergence identities for submersions"
        name = "tangent-field divergence equals fiber divergence"
        with self.guard(name, ref):
            Y = tangent_part(S, Z)
            dn = S.div_nu(Y, points=self.x_pts, tol=1e-8)
            fd = fiber_divergence(self.chart, g, S, Y)
            a = lambdify([dn])(x=self.x_pts)[0]
            b = lambdify([fd])(l=self.lam_pts, t=self.t_pts)[0]
            err = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
            self.residual(name, ref, err, 1e-10, note="relative to max(1, |value|)")
        name = "weighted divergence, three routes"
        with self.guard(name, ref):
            J = S.j_density
            r1 = divergence_weighted(Z, g, J)
            r2 = mul(J, divergence(Z.scale(ediv(1.0, J)), g))
            r3 = divergence_density(Z, ediv(g.volume_density, J))
            v = lambdify([r1, r2, r3])(x=self.x_pts)
            scale = np.maximum(1.0, np.abs(v[0]))
            err = float(max(np.max(np.abs(v[0] - v[1]) / scale), np.max(np.abs(v[0] - v[2]) / scale)))
            self.residual(name, ref, err, 1e-10, note="relative to max(1, |value|)")
        name = "divergence of Lie brackets"
        with self.guard(name, ref):
            pairs = [(S.lift_coordinate(a), Z) for a in range(self.sc.k)]
            if self.sc.k >= 2:
                pairs.append((S.lift_coordinate(0), S.lift_coordinate(1)))
            errs = []
            for X, Y in pairs:
                lhs = divergence(lie_bracket(X, Y), g)
                rhs = add(X.apply(divergence(Y, g)), neg(Y.apply(divergence(X, g))))
                v = lambdify([lhs, rhs])(x=self.x_pts)
                errs.append(np.max(np.abs(v[0] - v[1]) / np.maximum(1.0, np.abs(v[1]))))
            self.residual(name, ref, float(max(errs)), 1e-10, note="relative to max(1, |value|)")
        ex = self.sc.expected.get("div_nu_lift")
        if ex is not None:
            name = "divergence of the lift, closed form"
            with self.guard(name, ref):
                X = S.lift_coordinate(0)
                dn = S.div_nu(X, points=self.x_pts)
                want = parse(ex, ambient_dim=self.sc.m)
                self.residual(name, ref, self.max_abs([add(dn, neg(want))]), 1e-12)

    def quadrature_suite(self):
        sc, S, g, ch = self.sc, self.S, self.g, self.chart
        rule = ch.rule(self.order)
        for i, f in enumerate(sc.test_functions):
            with self.guard(f"quadrature convergence, f[{i}]", "fiber integral, rule-order doubling"):
                rep = convergence_gate(ch, g, S, f, self.order, sc.lambda_grid[0])
                name = f"quadrature convergence, f[{i}]"
                self.add(replace(rep, name=name, tol=self.tol(name, rep.tol)))
        for key, measure, label in (("eta_mass", "eta", "fiber area"), ("mu_mass", "mu", "fiber mass")):
            ex = sc.expected.get(key)
            if ex is None:
                continue
            name = f"{label}, closed form"
            with self.guard(name, "fiber measures"):
                with timed() as ms:
                    v = fiber_integral(ch, g, S, ONE, measure, rule, ex["lambda"])
                self.add(CheckReport(name, "fiber measures", v, ex["value"], abs(v - ex["value"]),
                                     self.tol(name, 1e-8), ms=ms[0]))
        for i, f in enumerate(sc.test_functions):
            for n, X in enumerate(sc.base_fields):
                name = f"derivation formula, f[{i}] along X[{n}]"
                with self.guard(name, "derivative of fiber integrals"):
                    rep = derivation_check(ch, g, S, f, X, self.order, self.lam_mid, name=name)
                    tol = self.opt.tol if self.opt.tol is not None else sc.tolerances.get(name, rep.tol)
                    self.add(CheckReport(name, rep.paper_ref, rep.value, rep.oracle, rep.abs_err, tol,
                                         ms=rep.ms, note="oracle: Richardson central difference of F"))
        ex = sc.expected.get("derivation")
        if ex is not None:
            name = "derivation formula, closed form"
            with self.guard(name, "derivative of fiber integrals"):
                with timed() as ms:
                    v = derivation_formula_rhs(ch, g, S, sc.test_functions[ex["f"]], sc.base_fields[ex["field"]],
                                               rule, ex["lambda"])
                self.add(CheckReport(name, "derivative of fiber integrals", v, ex["value"],
                                     abs(v - ex["value"]), self.tol(name, 1e-6), ms=ms[0]))

    def coarea(self):
        c = self.sc.coarea
        if c is None:
            return
        name = "coarea formula"
        with self.guard(name, "coarea formula for submersions"):
            abs_tol = self.opt.tol if self.opt.tol is not None else self.sc.tolerances.get(name)
            rep = coarea_check(c.chart or self.chart, self.g, self.S, c.f, c.base_box, self.order,
                               region=c.region, oracle=c.expected, abs_tol=abs_tol)
            self.add(replace(rep, note="value is [direct volume integral, nested fiber integral]"))

    def connection_suite(self):
        sc, D = self.sc, self.D
        secs = list(sc.sections)
        if not secs:
            secs = [self.random_section()]
        k = sc.k
        a = opf.random_poly(self.rng, k, 2, 0.5)
        a_rho = self.S.compose(a)
        X = sc.base_fields[0]
        Y = sc.base_fields[1] if len(sc.base_fields) > 1 else opf.random_base_field(self.rng, k)
        ref = "axioms of the direct-image connection"
        name = "connection Leibniz rule"
        with self.guard(name, ref):
            with timed() as ms:
                errs = []
                for phi in secs:
                    lhs = D.nabla(X, phi.scale(a_rho))
                    rhs = phi.scale(self.S.compose(X.apply(a))) + D.nabla(X, phi).scale(a_rho)
                    errs.append(self.max_abs((lhs - rhs).components, complex_=True))
            self.residual(name, ref, max(errs), 1e-10, ms=ms[0])
        name = "connection additivity and linearity"
        with self.guard(name, ref):
            with timed() as ms:
                errs = []
                for phi in secs:
                    s1 = D.nabla(X + Y, phi) - D.nabla(X, phi) - D.nabla(Y, phi)
                    s2 = D.nabla(X.scale(a), phi) - D.nabla(X, phi).scale(a_rho)
                    errs.append(self.max_abs(s1.components + s2.components, complex_=True))
            self.residual(name, ref, max(errs), 1e-10, ms=ms[0])
        name = "bundle metric compatibility"
        with self.guard(name, ref):
            W = self.random_field_x()
            errs = []
            for phi in secs:
                for psi in secs:
                    h = pointwise_inner(phi, psi)
                    lhs = ComplexExpr(W.apply(h.re), W.apply(h.im))
                    rhs = pointwise_inner(sc.bundle.nabla_E(W, phi), psi) + pointwise_inner(phi, sc.bundle.nabla_E(W, psi))
                    errs.append(self.max_abs([lhs - rhs], complex_=True))
            self.residual(name, ref, max(errs), 1e-10)
        rule = self.chart.rule(self.order)
        pairs = [(0, 0)] + ([(0, 1), (1, len(secs) - 1)] if len(secs) > 1 else [])
        for i, j in pairs:
            for n, Xn in enumerate(sc.base_fields):
                name = f"metric compatibility, sections ({i},{j}) along X[{n}]"
                with self.guard(name, ref):
                    rep = D.metric_compat_check(secs[i], secs[j], Xn, rule, self.lam_mid,
                                                tol=self.tol(name, 1e-5), name=name)
                    self.add(replace(rep, note="oracle: h(∇φ,ψ) + h(φ,∇ψ); value: finite difference of h"))
        name = "inner product conjugate symmetry"
        with self.guard(name, ref):
            errs = []
            for phi in secs:
                for psi in secs:
                    h1 = D.inner_product(phi, psi, rule, self.lam_mid)
                    h2 = D.inner_product(psi, phi, rule, self.lam_mid)
                    errs.append(abs(h1 - h2.conjugate()))
            self.residual(name, ref, max(errs), 1e-13)
        ex = sc.expected.get("orthogonal_sections")
        if ex is not None:
            name = "orthogonality of odd and even sections"
            with self.guard(name, ref):
                h = D.inner_product(secs[ex[0]], secs[ex[1]], rule, self.lam_mid)
                self.residual(name, ref, abs(h), 1e-10)
        if sc.negative_control:
            name = "negative control: dropping the divergence correction breaks compatibility"
            with self.guard(name, ref):
                lhs, rhs = D.metric_compat(secs[0], secs[0], X, rule, self.lam_mid, correction=False)
                self.add(CheckReport.at_least(name, ref, abs(lhs - rhs), 1e-2,
                                              note="value is |Δ| without the correction term"))

    def curvature_suite(self):
        sc, D = self.sc, self.D
        ref = "curvature of the direct-image connection"
        if sc.levi_civita:
            name = "Christoffel symbols are metric"
            with self.guard(name, ref):
                self.residual(name, ref, christoffel_compat_residual(self.g, self.x_pts), 1e-10)
        if sc.k < 2 or len(sc.base_fields) < 2:
            return
        secs = list(sc.sections) or [self.random_section()]
        F = sc.base_fields
        pairs = [(0, 1)] + ([(0, 2)] if len(F) > 2 else [])
        for i, j in pairs:
            integrable = D.vertical_defect(F[i], F[j], self.x_pts) <= 1e-12
            for s, phi in enumerate(secs):
                name = f"curvature identity, X[{i}], X[{j}], section {s}"
                with self.guard(name, ref):
                    rep = D.curvature_check(F[i], F[j], phi, self.x_pts, tol=self.tol(name, 1e-9))
                    if integrable:
                        self.add(replace(rep, name=name))
                    else:
                        self.add(CheckReport.at_least(
                            f"{name}, lifted brackets not horizontal so R^E(X̌,Y̌) alone is off", ref,
                            rep.abs_err, 1e-6,
                            note="flag only: the vertical bracket term is nonzero for this submersion"))
                name = f"curvature identity with vertical bracket term, X[{i}], X[{j}], section {s}"
                with self.guard(name, ref):
                    rep = D.curvature_full_check(F[i], F[j], phi, self.x_pts, tol=self.tol(name, 1e-9))
                    self.add(replace(rep, name=name))
        ex = sc.expected.get("bundle_curvature")
        if ex is not None:
            name = "bundle curvature on lifted fields, closed form"
            with self.guard(name, ref):
                i, j = ex["fields"]
                R = sc.bundle.curvature(self.S.lift(F[i]), self.S.lift(F[j]))
                want = ComplexExpr(parse(ex["re"], ambient_dim=sc.m), parse(ex["im"], ambient_dim=sc.m))
                err = self.max_abs([R[0][0] - want], complex_=True)
                self.residual(name, ref, err, 1e-12)

    def trivialization_suite(self):
        sc, D, tr = self.sc, self.D, self.sc.trivialization
        if tr is None:
            return
        g, S = self.g, self.S
        ref = "local trivialization of the direct image"
        name = "precondition: trivialization chart follows normal lifts"
        normal = False
        with self.guard(name, ref):
            d = tr.normality_defect(S, sc.lambda_grid, self.t_nodes)
            self.residual(name, ref, d, 1e-10)
            normal = self.reports[-1].passed
        rule = tr.chart.rule(self.order)
        name = "unitarity of the trivialization"
        with self.guard(name, ref):
            with timed() as ms:
                errs = []
                for _ in range(10):
                    u = self.random_section()
                    for lam in sc.lambda_grid:
                        lhs, rhs = unitarity_residual(tr, D, u, rule, lam)
                        errs.append(abs(lhs - rhs) / max(1.0, abs(rhs)))
            self.residual(name, ref, max(errs), 1e-8, ms=ms[0],
                          note=f"{len(errs)} section/λ pairs, relative to max(1, ‖u‖²)")
        name = "trivialization round trip"
        with self.guard(name, ref):
            errs = [roundtrip_residual(tr, D, self.random_section(), lam, self.t_nodes) for lam in sc.lambda_grid]
            self.residual(name, ref, max(errs), 1e-10)
        if normal:
            secs = list(sc.sections) or [self.random_section()]
            label = "intertwining (flat)" if sc.bundle.is_flat else "intertwining"
            for s, phi in enumerate(secs):
                for n, X in enumerate(sc.base_fields):
                    name = f"{label}, section {s} along X[{n}]"
                    with self.guard(name, ref):
                        rep = intertwine_check(tr, D, phi, X, self.lam_mid, self.t_nodes,
                                               tol=self.tol(name, 1e-5), name=name)
                        self.add(rep)
        if sc.bundle.is_flat:
            name = "horizontal inner-product constancy"
            with self.guard(name, ref):
                rep = horizontal_constancy_check(tr, D, [CONE] * sc.bundle.rank, [CONE] * sc.bundle.rank,
                                                 sc.lambda_grid, rule, tol=self.tol(name, 1e-8),
                                                 oracle=sc.expected.get("horizontal"))
                self.add(rep)
                ex = sc.expected.get("horizontal")
                if ex is not None:
                    h = rep.value
                    name2 = "horizontal inner product, closed form"
                    err = max(abs(v - ex) for v in h)
                    self.residual(name2, ref, err, 1e-8, value=h, oracle=ex)
            name = "horizontal inner-product constancy, mixed pair"
            with self.guard(name, ref):
                v0 = [ComplexExpr(add(0.3, mul(0.7, var("t", 0))), mul(0.2, var("t", 0)))] * sc.bundle.rank
                rep = horizontal_constancy_check(tr, D, [CONE] * sc.bundle.rank, v0, sc.lambda_grid, rule,
                                                 tol=self.tol(name, 1e-8))
                self.add(replace(rep, name=name))
        self.tilde_A_suite(tr, rule)

    def tilde_A_suite(self, tr, rule):
        sc, S = self.sc, self.S
        ref = "multiplication fields of a trivialization"
        F = sc.base_fields
        X = F[0]
        Y = F[1] if len(F) > 1 else opf.random_base_field(self.rng, sc.k)
        a = opf.random_poly(self.rng, sc.k, 2, 0.5)
        name = "multiplication field is additive and linear"
        with self.guard(name, ref):
            AX, AY = tr.tilde_A(sc.bundle, S, X), tr.tilde_A(sc.bundle, S, Y)
            AXY = tr.tilde_A(sc.bundle, S, X + Y)
            AaX = tr.tilde_A(sc.bundle, S, X.scale(a))
            r = sc.bundle.rank
            zs = [AXY[i][j] - AX[i][j] - AY[i][j] for i in range(r) for j in range(r)]
            zs += [AaX[i][j] - AX[i][j] * a for i in range(r) for j in range(r)]
            zs = [z for z in zs if not z.is_zero()]
            err = self.max_abs(zs, complex_=True, l=self.lam_pts, t=self.t_pts) if zs else 0.0
            self.residual(name, ref, err, 1e-12)
        name = "multiplication field is skew for the K pairing"
        with self.guard(name, ref):
            r = sc.bundle.rank
            lam = self.lam_mid
            At = tr.tilde_A(sc.bundle, S, X)
            n = rule.nodes.shape[1]
            Av = evaluate_complex([z for row in At for z in row], l=np.atleast_1d(lam), t=rule.nodes)
            Av = np.broadcast_to(Av, (r * r, n)).reshape(r, r, n)
            f = self.rng.normal(size=(r, n)) + 1j * self.rng.normal(size=(r, n))
            h = self.rng.normal(size=(r, n)) + 1j * self.rng.normal(size=(r, n))
            Af = np.einsum("abn,bn->an", Av, f)
            Ah = np.einsum("abn,bn->an", Av, h)
            lhs = k_pairing(tr, rule, Af, h)
            rhs = -k_pairing(tr, rule, f, Ah)
            err = abs(lhs - rhs) / max(1.0, abs(lhs))
            self.residual(name, ref, err, 1e-10, note="relative to max(1, |⟨Ãf, g⟩|)")

    def operator_suite(self):
        k = self.sc.k
        rng = np.random.default_rng(self.sc.seed + 1000)
        pts = rng.uniform(-1.0, 1.0, (k, 20))
        A = opf.random_operator(rng, 3, 3, k)
        B = opf.random_operator(rng, 3, 3, k)
        c1, c2, c3 = (opf.random_connection(rng, 3, k) for _ in range(3))
        X, Y = opf.random_base_field(rng, k), opf.random_base_field(rng, k)
        f = opf.random_poly(rng, k)
        u, v = opf.random_vector(rng, 3, k), opf.random_vector(rng, 3, k)
        ref = "induced connection on operator fields"
        name = "operator connection suite"
        with self.guard(name, ref):
            for rep in opf.prop_con_checks(A, c1, c2, X, Y, f, u, v, pts, tol=self.tol(name, 1e-11)):
                self.add(rep)
            self.add(opf.leibniz_check(A, B, c1, c2, c3, X, pts, tol=self.tol(name, 1e-11)))
            self.add(opf.unitary_check(opf.rotation_unitary(k), c1, c2, X, pts, tol=self.tol(name, 1e-11)))
            tau = opf.OperatorField(((ComplexExpr(cos(var("l", 0)), sin(var("l", 0))),),))
            zero = opf.OperatorField(((ComplexExpr(ZERO, ZERO),),))
            minus_i = opf.OperatorField(((ComplexExpr(ZERO, const(-1.0)),),))
            X0 = VectorField.coordinate(0, k, "l")
            for rep in opf.transition_relation_check(tau, zero, minus_i, X0, pts, tol=self.tol(name, 1e-11)):
                self.add(rep)
        if self.sc.transition_gauge is not None and self.sc.trivialization is not None:
            self.gauge_transition()

    def gauge_transition(self):
        """Two trivializations differing by a gauge phase, checked against the transition relation."""
        sc, S, tr = self.sc, self.S, self.sc.trivialization
        c = sc.transition_gauge
        ref = "transition of trivializations"
        name = "transition relation from two trivializations"
        with self.guard(name, ref):
            A = [[[ComplexExpr(ZERO, mul(c, diff(S.components[0], var("x", i))))]] for i in range(sc.m)]
            Dc = DirectImage(HermitianBundle(1, A), S, self.chart)
            X = sc.base_fields[0]
            phi = sc.sections[-1] if sc.sections else self.random_section()
            lam = np.atleast_1d(np.asarray(self.lam_mid, dtype=float))
            reps = gauge_transition_check(tr, Dc, phi, X, lam, self.t_nodes, c, tol=self.tol(name, 1e-5))
            for rep in reps:
                self.add(rep)


def run_scenario(scenario: Scenario, options: RunOptions | None = None) -> list:
    """Execute every applicable check of ``scenario``."""
    return ScenarioRunner(scenario, options).run()
