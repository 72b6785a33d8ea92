import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from rdi.expr_core import ONE, ZERO, const, evaluate, lambdify, mul, parse
from rdi.fiber_quad import (
    AxisSpec,
    FiberChart,
    QuadratureRule,
    coarea_check,
    convergence_gate,
    derivation_check,
    derivation_formula_rhs,
    directional_fd,
    fiber_divergence,
    fiber_integral,
    integrate_region,
    tangent_part,
)
from rdi.geometry import Metric, VectorField
from rdi.submersion import Submersion

E3 = Metric.euclidean(3)
D_L1 = VectorField.coordinate(0, 1, "l")
SPHERE = Submersion([parse("x1^2 + x2^2 + x3^2")], E3)
SPHERE_CHART = FiberChart(
    [parse("sqrt(l1)*sin(t1)*cos(t2)"), parse("sqrt(l1)*sin(t1)*sin(t2)"), parse("sqrt(l1)*cos(t1)")],
    [AxisSpec.interval(0, math.pi), AxisSpec.periodic()],
)
LINE = Submersion([parse("x1")], Metric.euclidean(2))
BUMP = "(1 - x2^2)^4"
LINE_CHART = FiberChart([parse("l1"), parse("t1")], [AxisSpec.interval(-1, 1)])


def test_sphere_area_element(rng):
    area = SPHERE_CHART.area_element(E3)
    lam = rng.uniform(0.5, 3, 10)
    t = SPHERE_CHART.interior_samples(rng, 10)
    got = lambdify([area])(l=lam[None], t=t)[0]
    assert np.allclose(got, lam * np.sin(t[0]), rtol=1e-13)


def test_line_area_element():
    assert evaluate(LINE_CHART.area_element(Metric.euclidean(2)), l=(0.3,), t=(0.1,)) == 1.0


def test_area_element_scales_with_metric(rng):
    g4 = Metric([[const(4.0) if i == j else ZERO for j in range(3)] for i in range(3)])
    lam, t = rng.uniform(0.5, 2, (1, 5)), SPHERE_CHART.interior_samples(rng, 5)
    a = lambdify([SPHERE_CHART.area_element(E3), SPHERE_CHART.area_element(g4)])(l=lam, t=t)
    assert np.allclose(a[1], 2 ** 2 * a[0], rtol=1e-14)


@pytest.mark.parametrize("measure, want", [("eta", 4 * math.pi), ("mu", 2 * math.pi)])
def test_sphere_fiber_masses(measure, want):
    v = fiber_integral(SPHERE_CHART, E3, SPHERE, ONE, measure, SPHERE_CHART.rule(16), 1.0)
    assert abs(v - want) <= 1e-8


@pytest.mark.parametrize("lam", [0.25, 1.0, 2.5])
def test_mu_mass_follows_closed_form(lam):
    v = fiber_integral(SPHERE_CHART, E3, SPHERE, ONE, "mu", SPHERE_CHART.rule(16), lam)
    assert v == pytest.approx(2 * math.pi * math.sqrt(lam), rel=1e-12)


def test_zero_integrand():
    assert fiber_integral(SPHERE_CHART, E3, SPHERE, ZERO, "mu", SPHERE_CHART.rule(8), 1.0) == 0.0
    assert derivation_formula_rhs(SPHERE_CHART, E3, SPHERE, ZERO, D_L1, SPHERE_CHART.rule(8), 1.0) == 0.0


def test_sphere_derivation_formula():
    rhs = derivation_formula_rhs(SPHERE_CHART, E3, SPHERE, ONE, D_L1, SPHERE_CHART.rule(16), 1.0)
    assert abs(rhs - math.pi) <= 1e-6
    F = lambda L: 2 * math.pi * math.sqrt(float(np.atleast_1d(L)[0]))  # noqa: E731
    fd = directional_fd(F, np.array([1.0]), np.array([1.0]))
    assert abs(rhs - fd) <= 1e-6


def test_derivation_check_against_quadrature_fd():
    rep = derivation_check(SPHERE_CHART, E3, SPHERE, parse("1 + x1*x3"), D_L1, 16, 1.3)
    assert rep.passed and rep.abs_err < 1e-8


def test_line_derivation_is_integral_of_bump():
    # F(λ) = λ ∫ bump, so F' = ∫ bump = 256/315 independent of λ
    f = parse(f"{BUMP}*x1")
    rhs = derivation_formula_rhs(LINE_CHART, Metric.euclidean(2), LINE, f, D_L1, LINE_CHART.rule(16), 0.5)
    z, w = np.polynomial.legendre.leggauss(20)
    assert rhs == pytest.approx(float(np.dot(w, (1 - z ** 2) ** 4)), rel=1e-13)


def test_convergence_gate():
    rep = convergence_gate(SPHERE_CHART, E3, SPHERE, parse("exp(x3)"), 16, 1.0)
    assert rep.passed


def test_shell_coarea():
    region = ([parse("t1*sin(t2)*cos(t3)"), parse("t1*sin(t2)*sin(t3)"), parse("t1*cos(t2)")],
              [AxisSpec.interval(1, 2), AxisSpec.interval(0, math.pi), AxisSpec.periodic()])
    rep = coarea_check(SPHERE_CHART, E3, SPHERE, ONE, [(1, 4)], 16, region=region, oracle=30 * math.pi)
    assert rep.passed and rep.abs_err <= 1e-6 * 30 * math.pi
    rep = coarea_check(SPHERE_CHART, E3, SPHERE, ONE, [(1, 4)], 16, oracle=30 * math.pi)
    assert rep.passed


def test_unit_square_coarea():
    chart = FiberChart([parse("l1"), parse("t1")], [AxisSpec.interval(0, 1)])
    rep = coarea_check(chart, Metric.euclidean(2), LINE, parse("x1*x2"), [(0, 1)], 8, oracle=0.25, abs_tol=1e-10)
    assert rep.passed
    assert rep.value[0] == pytest.approx(0.25, abs=1e-12) and rep.value[1] == pytest.approx(0.25, abs=1e-12)
    rep = coarea_check(chart, Metric.euclidean(2), LINE, ZERO, [(0, 1)], 8)
    assert rep.value == [0.0, 0.0]


@given(st.integers(1, 12), st.integers(0, 23))
def test_gauss_rule_exact_to_degree(n, p):
    assume(p <= 2 * n - 1)
    rule = QuadratureRule([AxisSpec.interval(-1, 2)], n)
    got = float(np.dot(rule.nodes[0] ** p, rule.weights))
    want = (2.0 ** (p + 1) - (-1.0) ** (p + 1)) / (p + 1)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(st.integers(1, 16), st.integers(0, 20))
def test_periodic_rule_exact_for_trig(n, p):
    assume(p < n)
    rule = QuadratureRule([AxisSpec.periodic()], n)
    got = float(np.dot(np.cos(p * rule.nodes[0]), rule.weights))
    want = 2 * math.pi if p == 0 else 0.0
    assert got == pytest.approx(want, abs=1e-12)


@given(st.integers(1, 10))
def test_weights_positive(n):
    for ax in (AxisSpec.interval(0, 3), AxisSpec.periodic()):
        assert np.all(QuadratureRule([ax], n).weights > 0)


def test_box_volume_via_region():
    v = integrate_region([parse("2*t1"), parse("t2 + t1")], 2,
                         [AxisSpec.interval(0, 1), AxisSpec.interval(0, 1)], ONE, Metric.euclidean(2), 4)
    assert v == pytest.approx(2.0, rel=1e-14)


def test_fiber_divergence_of_tangent_field(rng):
    Z = VectorField((parse("x2*x3"), parse("1 + x1"), parse("x1*x2 - x3")))
    Y = tangent_part(SPHERE, Z)
    lam = rng.uniform(0.5, 2, (1, 30))
    t = SPHERE_CHART.interior_samples(rng, 30)
    x = lambdify(SPHERE_CHART.map)(l=lam, t=t)
    a = lambdify([SPHERE.div_nu(Y, points=x)])(x=x)[0]
    b = lambdify([fiber_divergence(SPHERE_CHART, E3, SPHERE, Y)])(l=lam, t=t)[0]
    assert np.max(np.abs(a - b)) <= 1e-10


def test_fiber_integral_independent_of_chart_orientation():
    flipped = FiberChart([mul(-1.0, e) for e in SPHERE_CHART.map], SPHERE_CHART.domain)
    f = parse("1 + x1^2")
    a = fiber_integral(SPHERE_CHART, E3, SPHERE, f, "mu", SPHERE_CHART.rule(16), 1.7)
    b = fiber_integral(flipped, E3, SPHERE, f, "mu", flipped.rule(16), 1.7)
    assert a == pytest.approx(b, rel=1e-13)
