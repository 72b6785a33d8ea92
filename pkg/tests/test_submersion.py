import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdi.expr_core import ONE, ZERO, add, const, evaluate, lambdify, mul, neg, parse, var
from rdi.geometry import Metric, VectorField, divergence
from rdi.scenario import BUILTIN_NAMES, get_scenario
from rdi.submersion import ProjectabilityError, RankError, Submersion

E3 = Metric.euclidean(3)
D_L1 = VectorField.coordinate(0, 1, "l")
SPHERE = Submersion([parse("x1^2 + x2^2 + x3^2")], E3)


def at(exprs, p):
    return [evaluate(e, x=p) for e in exprs]


def test_sphere_lift_at_pole():
    # X̌ = ∇ρ/‖∇ρ‖² = (2,0,0)/4
    assert at(SPHERE.lift(D_L1).components, (1, 0, 0)) == [0.5, 0.0, 0.0]


def test_linear_projection_lift_is_constant():
    S = Submersion([parse("x1")], Metric.euclidean(2))
    assert S.lift(D_L1).components == (ONE, ZERO)


def test_j_density_examples():
    assert evaluate(SPHERE.j_density, x=(1, 0, 0)) == 2.0
    assert Submersion([parse("x1")], Metric.euclidean(2)).j_density is ONE
    S2 = Submersion([parse("x1"), parse("x2")], E3)
    assert S2.j_density is ONE
    for i in range(2):
        J, F = S2.j_factorization(i)
        assert evaluate(F, x=(0.1, 0.2, 0.3)) == 1.0


def test_j_density_is_gradient_norm_for_k1(rng):
    S = Submersion([parse("x1*x2 + sin(x3)")], E3)
    pts = rng.uniform(-1, 1, (3, 50))
    grad = lambdify([parse("x2"), parse("x1"), parse("cos(x3)")])(x=pts)
    assert np.allclose(lambdify([S.j_density])(x=pts)[0], np.linalg.norm(grad, axis=0), rtol=1e-14)


def test_lift_projected_examples():
    assert at(SPHERE.lift_projected(0).components, (1, 0, 0)) == [0.5, 0.0, 0.0]
    S2 = Submersion([parse("x1"), parse("x2")], E3)
    assert at(S2.lift_projected(0).components, (0.3, 0.1, 2.0)) == [1.0, 0.0, 0.0]


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_pushforward_of_lift_on_every_scenario(name, rng):
    sc = get_scenario(name)
    S = sc.submersion
    n = 100
    lam = np.array([rng.uniform(min(g[a] for g in sc.lambda_grid), max(g[a] for g in sc.lambda_grid), n)
                    for a in range(sc.k)])
    pts = lambdify(sc.chart.map)(l=lam, t=sc.chart.interior_samples(rng, n))
    for X in sc.base_fields:
        push = S.pushforward(S.lift(X))
        want = S.compose_many(X.components)
        v = lambdify([add(p, neg(q)) for p, q in zip(push, want)])(x=pts)
        assert np.max(np.abs(v)) <= 1e-12


coef = st.floats(-0.5, 0.5, allow_nan=False)


@given(st.lists(coef, min_size=8, max_size=8), st.integers(0, 2 ** 31))
def test_lift_projected_agrees_with_gram_lift(c, seed):
    x1, x2, x3 = (var("x", i) for i in range(3))
    rho = [add(x1, mul(c[0], x3, x3), mul(c[1], x2, x3), mul(c[2], x1, x2)),
           add(x2, mul(c[3], x3, x3), mul(c[4], x1, x3), mul(c[5], x1, x1))]
    S = Submersion(rho, Metric.conformal(add(mul(c[6], x1), mul(c[7], x2, x3)), 3))
    pts = np.random.default_rng(seed).uniform(-0.5, 0.5, (3, 20))
    for a in range(2):
        d = [add(p, neg(q)) for p, q in zip(S.lift_coordinate(a).components, S.lift_projected(a).components)]
        assert np.max(np.abs(lambdify(d)(x=pts))) <= 1e-10


def test_lift_is_orthogonal_to_fibers(rng):
    S = Submersion([parse("x1 + 0.2*x3^2"), parse("x2 + 0.3*sin(x3)")], Metric.conformal(parse("0.1*x1"), 3))
    pts = rng.uniform(-1, 1, (3, 30))
    P = S.tangent_projector
    for a in range(2):
        X = S.lift_coordinate(a)
        inner = [S.g.inner(X.components, [P[i][j] for i in range(3)]) for j in range(3)]
        assert np.max(np.abs(lambdify(inner)(x=pts))) <= 1e-12


def test_div_nu_examples(rng):
    X = SPHERE.lift(D_L1)
    pts = rng.uniform(0.3, 1.5, (3, 20))
    d = SPHERE.div_nu(X, points=pts)
    want = parse("1/(2*(x1^2 + x2^2 + x3^2))")
    assert np.allclose(lambdify([d])(x=pts)[0], lambdify([want])(x=pts)[0], rtol=1e-13)
    assert SPHERE.div_nu(VectorField.zero(3), points=pts) is ZERO
    rot = VectorField((parse("x2"), parse("-(x1)"), ZERO))
    assert SPHERE.div_nu(rot, points=pts) is divergence(rot, E3)


def test_div_nu_rejects_non_projectable_fields(rng):
    pts = rng.uniform(0.3, 1.5, (3, 20))
    with pytest.raises(ProjectabilityError):
        SPHERE.div_nu(VectorField((parse("x1"), ZERO, ZERO)), points=pts)


def test_rank_failure_at_critical_point():
    with pytest.raises(RankError):
        SPHERE.check_rank(np.zeros((3, 1)))
    assert SPHERE.min_gram_singular_value(np.array([[1.0], [0.0], [0.0]])) == pytest.approx(4.0)


def test_without_drops_a_component():
    S2 = Submersion([parse("x1"), parse("x2 + x3^2")], E3)
    assert S2.without(0).components == (parse("x2 + x3^2"),)
