import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdi.direct_image import (
    DirectImage,
    HermitianBundle,
    RankMismatch,
    Section,
    christoffel,
    christoffel_compat_residual,
    evaluate_complex,
    levi_civita_bundle,
    pointwise_inner,
    real_section,
)
from rdi.expr_core import CONE, CZERO, ONE, ZERO, ComplexExpr, add, const, lambdify, mul, parse, var
from rdi.fiber_quad import AxisSpec, FiberChart
from rdi.geometry import Metric, VectorField
from rdi.scenario import get_scenario
from rdi.submersion import Submersion

E3 = Metric.euclidean(3)
D_L1 = VectorField.coordinate(0, 1, "l")
SPHERE = Submersion([parse("x1^2 + x2^2 + x3^2")], E3)
SPHERE_CHART = FiberChart(
    [parse("sqrt(l1)*sin(t1)*cos(t2)"), parse("sqrt(l1)*sin(t1)*sin(t2)"), parse("sqrt(l1)*cos(t1)")],
    [AxisSpec.interval(0, math.pi), AxisSpec.periodic()],
)
FLAT_SPHERE = DirectImage(HermitianBundle.flat(1, 3), SPHERE, SPHERE_CHART)
ONE_SEC = Section((CONE,))


def cvals(sec, pts):
    return evaluate_complex(list(sec.components), x=pts)


def test_flat_connection_is_directional_derivative(rng):
    B = HermitianBundle.flat(2, 3)
    Y = VectorField((parse("x2"), parse("1"), parse("x1*x3")))
    phi = Section((ComplexExpr(parse("x1^2"), parse("x3")), ComplexExpr(parse("sin(x2)"), ZERO)))
    got = B.nabla_E(Y, phi)
    want = Section(tuple(ComplexExpr(Y.apply(z.re), Y.apply(z.im)) for z in phi.components))
    assert got == want


def test_line_bundle_connection_value():
    B = HermitianBundle(1, [[[ComplexExpr(ZERO, var("x", 1))]], [[CZERO]]])
    out = B.nabla_E(VectorField.coordinate(0, 2), ONE_SEC)
    assert out.components[0] == ComplexExpr(ZERO, var("x", 1))


def test_rank_mismatch():
    with pytest.raises(RankMismatch):
        HermitianBundle.flat(2, 3).nabla_E(VectorField.coordinate(0, 3), ONE_SEC)


def test_pointwise_compatibility_on_rank2_bundle(rng):
    sc = get_scenario("rank2_bundle")
    B = sc.bundle
    Y = VectorField((parse("x2 + 1"), parse("x1*x3"), parse("cos(x1)")))
    phi, psi = sc.sections
    h = pointwise_inner(phi, psi)
    lhs = ComplexExpr(Y.apply(h.re), Y.apply(h.im))
    rhs = pointwise_inner(B.nabla_E(Y, phi), psi) + pointwise_inner(phi, B.nabla_E(Y, psi))
    pts = rng.uniform(-1, 1, (3, 50))
    assert np.max(np.abs(evaluate_complex([lhs - rhs], x=pts))) <= 1e-10


def test_sphere_connection_on_constant_section(rng):
    # ∇_X 1 = ½ div X̌ = 1/(4‖x‖²)
    out = FLAT_SPHERE.nabla(D_L1, ONE_SEC)
    pts = rng.uniform(0.3, 1.5, (3, 20))
    want = 1 / (4 * np.sum(pts ** 2, axis=0))
    assert np.allclose(cvals(out, pts)[0], want, rtol=1e-13)
    assert FLAT_SPHERE.nabla(D_L1, Section.zero(1)).components[0].is_zero()


coef = st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4)


@given(coef, coef, st.integers(0, 2 ** 31))
def test_leibniz_rule(ca, cp, seed):
    sc = get_scenario("conformal_sphere")
    D = DirectImage(sc.bundle, sc.submersion, sc.chart)
    lam = var("l", 0)
    a = add(ca[0], mul(ca[1], lam), mul(ca[2], lam, lam))
    x1, x2, x3 = (var("x", i) for i in range(3))
    phi = Section((ComplexExpr(add(cp[0], mul(cp[1], x1, x3)), add(cp[2], mul(cp[3], x2))),))
    a_rho = sc.submersion.compose(a)
    X = VectorField((add(1.0, mul(0.5, lam)),), "l")
    lhs = D.nabla(X, phi.scale(a_rho))
    rhs = phi.scale(sc.submersion.compose(X.apply(a))) + D.nabla(X, phi).scale(a_rho)
    pts = np.random.default_rng(seed).uniform(0.3, 1.2, (3, 20))
    assert np.max(np.abs(cvals(lhs - rhs, pts))) <= 1e-10


def test_sphere_inner_products():
    rule = SPHERE_CHART.rule(16)
    assert FLAT_SPHERE.inner_product(ONE_SEC, ONE_SEC, rule, 1.0) == pytest.approx(2 * math.pi, rel=1e-14)
    odd = Section((ComplexExpr(parse("x3"), parse("x1*x2")),))
    assert abs(FLAT_SPHERE.inner_product(odd, ONE_SEC, rule, 1.0)) <= 1e-10
    phi = Section((ComplexExpr(parse("1 + x1"), parse("x2^2")),))
    psi = Section((ComplexExpr(parse("x3"), parse("1 - x1*x2")),))
    h1 = FLAT_SPHERE.inner_product(phi, psi, rule, 0.8)
    h2 = FLAT_SPHERE.inner_product(psi, phi, rule, 0.8)
    assert h1 == h2.conjugate()


def test_sphere_metric_compatibility_gives_pi():
    lhs, rhs = FLAT_SPHERE.metric_compat(ONE_SEC, ONE_SEC, D_L1, SPHERE_CHART.rule(16), 1.0)
    assert lhs == pytest.approx(math.pi, abs=1e-8)
    assert rhs == pytest.approx(math.pi, abs=1e-12)


def test_horizontal_section_has_zero_derivative():
    # T^{-1} applied to the constant 1 on the sphere: sqrt(2) ρ^{-1/4}
    phi = real_section([parse("sqrt(2)*(x1^2 + x2^2 + x3^2)^(-0.25)")])
    rule = SPHERE_CHART.rule(16)
    lhs, rhs = FLAT_SPHERE.metric_compat(phi, phi, D_L1, rule, 1.3)
    assert abs(lhs) <= 1e-9 and abs(rhs) <= 1e-12


def test_negative_control_without_correction():
    lhs, rhs = FLAT_SPHERE.metric_compat(ONE_SEC, ONE_SEC, D_L1, SPHERE_CHART.rule(16), 1.0, correction=False)
    assert rhs == 0.0 and abs(lhs - rhs) >= 1e-2


def test_rank2_metric_compatibility():
    sc = get_scenario("rank2_bundle")
    D = DirectImage(sc.bundle, sc.submersion, sc.chart)
    rule = sc.chart.rule(sc.quad_order)
    for X in sc.base_fields:
        rep = D.metric_compat_check(sc.sections[0], sc.sections[1], X, rule, [0.5, -0.1])
        assert rep.passed


def test_flat_curvature_vanishes(rng):
    sc = get_scenario("two_component")
    D = DirectImage(HermitianBundle.flat(1, 3), sc.submersion, sc.chart)
    pts = rng.uniform(-1, 1, (3, 50))
    rep = D.curvature_check(sc.base_fields[0], sc.base_fields[1], sc.sections[0], pts, tol=1e-10)
    assert rep.passed and rep.value == 0.0


def test_line_bundle_curvature_is_minus_i():
    B = HermitianBundle(1, [[[ComplexExpr(ZERO, var("x", 1))]], [[CZERO]]])
    R = B.curvature(VectorField.coordinate(0, 2), VectorField.coordinate(1, 2))
    assert R[0][0] == ComplexExpr(ZERO, const(-1.0))
    S = Submersion([parse("x1")], Metric.euclidean(2))
    V = S.lift(D_L1)
    tangential = VectorField((ZERO, ONE))
    assert S.pushforward(tangential) == [ZERO]
    R = B.curvature(V, V)
    assert R[0][0].is_zero()


def test_two_component_lifted_curvature(rng):
    sc = get_scenario("two_component")
    D = DirectImage(sc.bundle, sc.submersion, sc.chart)
    pts = rng.uniform(-1, 1, (3, 50))
    X, Y = sc.base_fields[0], sc.base_fields[1]
    lhs, rhs = D.curvature_sides(X, Y, ONE_SEC)
    assert np.allclose(cvals(lhs, pts), -1j, atol=1e-12)
    assert np.allclose(cvals(rhs, pts), -1j, atol=1e-12)


@pytest.mark.parametrize("pair", [(0, 1), (0, 2), (1, 2)])
def test_curvature_identity_on_integrable_submersion(pair, rng):
    sc = get_scenario("rank2_bundle")
    D = DirectImage(sc.bundle, sc.submersion, sc.chart)
    pts = rng.uniform(-1, 1, (3, 50))
    X, Y = (sc.base_fields[i] for i in pair)
    assert D.vertical_defect(X, Y, pts) <= 1e-12
    for phi in sc.sections:
        rep = D.curvature_check(X, Y, phi, pts)
        assert rep.passed and rep.value > 1e-2


def test_vertical_bracket_term_when_horizontal_distribution_twists(rng):
    sc = get_scenario("twisted_rank2")
    D = DirectImage(sc.bundle, sc.submersion, sc.chart)
    pts = rng.uniform(-1, 1, (3, 50))
    X, Y = sc.base_fields[0], sc.base_fields[1]
    V = D.vertical_bracket(X, Y)
    assert np.max(np.abs(lambdify(sc.submersion.pushforward(V))(x=pts))) <= 1e-12
    assert D.vertical_defect(X, Y, pts) > 1e-2
    phi = sc.sections[0]
    assert not D.curvature_check(X, Y, phi, pts).passed
    assert D.curvature_full_check(X, Y, phi, pts).passed


def test_levi_civita_bundle(rng):
    g = Metric.conformal(parse("0.1*sin(x1) + 0.05*x2*x3"), 3)
    pts = rng.uniform(-1, 1, (3, 40))
    B = levi_civita_bundle(g)
    assert B.rank == 3 and B.anti_hermitian_residual(pts) <= 1e-12
    assert christoffel_compat_residual(g, pts) <= 1e-12
    G = christoffel(g)
    vals = lambdify([G[l][k][j] - G[l][j][k] for l in range(3) for k in range(3) for j in range(3)])(x=pts)
    assert np.max(np.abs(vals)) == 0.0


def test_levi_civita_of_flat_metric_is_flat():
    assert levi_civita_bundle(Metric.euclidean(3)).is_flat
