"""Smooth fields of operators between constant fields ℂ^d over a base N.

A connection on the constant field ℂ^d is ``∇_X = X + Γ(X)`` with Γ(X)
anti-Hermitian.  Operator fields A: ℂ^{d1} → ℂ^{d2} carry the induced
connection ``∇̂_X(A) = ∇²_X A − A ∇¹_X = X(A) + Γ²(X) A − A Γ¹(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .direct_image import cadd, cmatmul, cmatvec, cscale, csub, czeros, dagger, evaluate_complex
from .expr_core import CONE, CZERO, ComplexExpr, ZERO, add, const, cos, mul, sin, var
from .geometry import VectorField
from .report import CheckReport, timed


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class OperatorField:
    """A ``d_out x d_in`` matrix of complex expressions over base coordinates."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(ComplexExpr.of(e) for e in row) for row in self.entries)
        if len({len(r) for r in rows}) > 1:
            raise DimensionMismatch("ragged operator matrix")
        object.__setattr__(self, "entries", rows)

    @property
    def dim_out(self) -> int:
        return len(self.entries)

    @property
    def dim_in(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def rows(self):
        return [list(r) for r in self.entries]

    @classmethod
    def identity(cls, d: int) -> "OperatorField":
        return cls(tuple(tuple(CONE if i == j else CZERO for j in range(d)) for i in range(d)))

    def adjoint(self) -> "OperatorField":
        return OperatorField(tuple(map(tuple, dagger(self.rows()))))

    def __matmul__(self, other: "OperatorField") -> "OperatorField":
        if self.dim_in != other.dim_out:
            raise DimensionMismatch("operator dimensions do not compose")
        return OperatorField(tuple(map(tuple, cmatmul(self.rows(), other.rows()))))

    def __add__(self, other):
        return OperatorField(tuple(map(tuple, cadd(self.rows(), other.rows()))))

    def __sub__(self, other):
        return OperatorField(tuple(map(tuple, csub(self.rows(), other.rows()))))

    def scale(self, c) -> "OperatorField":
        return OperatorField(tuple(map(tuple, cscale(c, self.rows()))))

    def apply(self, u):
        return cmatvec(self.rows(), list(u))

    def derivative(self, X: VectorField) -> "OperatorField":
        """Entrywise ``X(A)``."""
        return OperatorField(tuple(tuple(ComplexExpr(X.apply(z.re), X.apply(z.im)) for z in row)
                                   for row in self.entries))

    def flat(self):
        return [z for row in self.entries for z in row]


class MatrixConnection:
    """``∇_X = X + Γ(X)`` on ℂ^d with ``Γ(∂/∂l_j) = gamma[j]``."""

    def __init__(self, dim: int, gamma):
        self.dim = int(dim)
        self.gamma = [OperatorField(tuple(map(tuple, g))) for g in gamma]
        for g in self.gamma:
            if g.dim_in != self.dim or g.dim_out != self.dim:
                raise DimensionMismatch("connection matrices must be dim x dim")

    @classmethod
    def trivial(cls, dim: int, k: int) -> "MatrixConnection":
        return cls(dim, [czeros(dim, dim) for _ in range(k)])

    def of(self, X: VectorField) -> OperatorField:
        """``Γ(X) = Σ_j X^j Γ_j``."""
        out = OperatorField(tuple(map(tuple, czeros(self.dim, self.dim))))
        for c, g in zip(X.components, self.gamma):
            if c is not ZERO:
                out = out + g.scale(c)
        return out

    def nabla(self, X: VectorField, u):
        """``X(u) + Γ(X) u`` for a vector of complex expressions."""
        gu = self.of(X).apply(u)
        return [ComplexExpr(X.apply(z.re), X.apply(z.im)) + w for z, w in zip(u, gu)]

    def anti_hermitian_residual(self, points) -> float:
        zs = []
        for g in self.gamma:
            zs += (g + g.adjoint()).flat()
        return _max_abs(zs, points)


def nabla_hat(A: OperatorField, conn1: MatrixConnection, conn2: MatrixConnection,
              X: VectorField) -> OperatorField:
    """``X(A) + Γ²(X) A − A Γ¹(X)``."""
    if A.dim_in != conn1.dim or A.dim_out != conn2.dim:
        raise DimensionMismatch("operator field does not map between the connected spaces")
    return A.derivative(X) + (conn2.of(X) @ A) - (A @ conn1.of(X))


def _max_abs(zs, points) -> float:
    zs = [z for z in zs if not z.is_zero()]
    if not zs:
        return 0.0
    return float(np.max(np.abs(evaluate_complex(zs, l=points))))


def _diff_fields(a: OperatorField, b: OperatorField, points) -> float:
    return _max_abs((a - b).flat(), points)


def inner(u, v) -> ComplexExpr:
    """``⟨u, v⟩ = Σ u_a conj(v_a)``."""
    out = CZERO
    for a, b in zip(u, v):
        out = out + a * b.conj()
    return out


def prop_con_checks(A, conn1, conn2, X, Y, f, u, v, points, tol=1e-11) -> list:
    """Residuals of the four structural properties of ∇̂.

    (i) additivity in X and in A, and linearity over functions of the base;
    (ii) product rule for ``f A``;
    (iii) compatibility ``X⟨Au,v⟩ = ⟨∇̂_X(A)u, v⟩ + ⟨A∇¹_X u, v⟩ + ⟨Au, ∇²_X v⟩``
          and the adjoint pairing ``⟨∇̂_X(A)u, v⟩ = ⟨u, ∇̂_X(A*)v⟩``;
    (iv) ``∇̂_X(A*) = (∇̂_X A)*``.
    """
    reps = []
    ref = "induced connection on operator fields"
    with timed() as ms:
        B = A.scale(f) + A
        r1 = max(
            _diff_fields(nabla_hat(A, conn1, conn2, X + Y),
                         nabla_hat(A, conn1, conn2, X) + nabla_hat(A, conn1, conn2, Y), points),
            _diff_fields(nabla_hat(A + B, conn1, conn2, X),
                         nabla_hat(A, conn1, conn2, X) + nabla_hat(B, conn1, conn2, X), points),
            _diff_fields(nabla_hat(A, conn1, conn2, X.scale(f)),
                         nabla_hat(A, conn1, conn2, X).scale(f), points),
        )
    reps.append(CheckReport("operator connection: linearity", ref, r1, 0.0, r1, tol, ms=ms[0]))
    with timed() as ms:
        lhs = nabla_hat(A.scale(f), conn1, conn2, X)
        rhs = A.scale(X.apply(f)) + nabla_hat(A, conn1, conn2, X).scale(f)
        r2 = _diff_fields(lhs, rhs, points)
    reps.append(CheckReport("operator connection: product rule", ref, r2, 0.0, r2, tol, ms=ms[0]))
    with timed() as ms:
        NA = nabla_hat(A, conn1, conn2, X)
        Au = A.apply(u)
        pair = inner(Au, v)
        lhs = ComplexExpr(X.apply(pair.re), X.apply(pair.im))
        rhs = inner(NA.apply(u), v) + inner(A.apply(conn1.nabla(X, u)), v) + inner(Au, conn2.nabla(X, v))
        r3a = _max_abs([lhs - rhs], points)
        NAs = nabla_hat(A.adjoint(), conn2, conn1, X)
        r3b = _max_abs([inner(NA.apply(u), v) - inner(u, NAs.apply(v))], points)
        r3 = max(r3a, r3b)
    reps.append(CheckReport("operator connection: compatibility", ref, r3, 0.0, r3, tol, ms=ms[0]))
    with timed() as ms:
        r4 = _diff_fields(nabla_hat(A.adjoint(), conn2, conn1, X), NA.adjoint(), points)
    reps.append(CheckReport("operator connection: adjoint", ref, r4, 0.0, r4, tol, ms=ms[0]))
    return reps


def leibniz_check(A, B, conn1, conn2, conn3, X, points, tol=1e-11) -> CheckReport:
    """``∇̂_X(AB) = ∇̂_X(A)B + A∇̂_X(B)`` for B: H1→H2, A: H2→H3."""
    with timed() as ms:
        lhs = nabla_hat(A @ B, conn1, conn3, X)
        rhs = (nabla_hat(A, conn2, conn3, X) @ B) + (A @ nabla_hat(B, conn1, conn2, X))
        r = _diff_fields(lhs, rhs, points)
    return CheckReport("operator connection: Leibniz rule", "Leibniz rule for composed operator fields",
                       r, 0.0, r, tol, ms=ms[0])


def unitary_check(U, conn1, conn2, X, points, tol=1e-11) -> CheckReport:
    """``∇̂(U)U* + U∇̂(U*) = 0`` for a unitary field U: H1→H2."""
    with timed() as ms:
        s = (nabla_hat(U, conn1, conn2, X) @ U.adjoint()) + (U @ nabla_hat(U.adjoint(), conn2, conn1, X))
        unit = _diff_fields(U @ U.adjoint(), OperatorField.identity(U.dim_out), points)
        r = _max_abs(s.flat(), points)
    return CheckReport("operator connection: unitary fields", "derivative of U U* = I",
                       r, 0.0, r, tol, ms=ms[0], note=f"unitarity defect {unit:.1e}")


def transition_residuals(tau: OperatorField, At_i: OperatorField, At_j: OperatorField,
                         X: VectorField, points):
    """``(corrected, as_printed)`` residuals of the transition relation.

    corrected: ``X(τ) − (τ Ã_i − Ã_j τ)``; as printed: ``X(τ) − (τ Ã_i − Ã_i τ)``.
    """
    dt = tau.derivative(X)
    corrected = _diff_fields(dt, (tau @ At_i) - (At_j @ tau), points)
    printed = _diff_fields(dt, (tau @ At_i) - (At_i @ tau), points)
    return corrected, printed


def transition_relation_check(tau, At_i, At_j, X, points, tol=1e-11, flag_threshold=1e-6):
    """Report the corrected residual (must vanish) and flag the as-printed form."""
    with timed() as ms:
        corrected, printed = transition_residuals(tau, At_i, At_j, X, points)
    ref = "transition of trivializations"
    return [
        CheckReport("transition relation", ref, corrected, 0.0, corrected, tol, ms=ms[0]),
        CheckReport.at_least("transition relation, as-printed index form is nonzero", ref,
                             printed, flag_threshold,
                             note="flag only: the form with Ã_i on both sides does not vanish"),
    ]


# random fields -----------------------------------------------------------------

def random_poly(rng, k: int, degree: int = 2, scale: float = 1.0):
    """Random real polynomial of total degree ≤ ``degree`` in l1..lk."""
    terms = [const(rng.normal() * scale)]
    for a in range(k):
        terms.append(mul(rng.normal() * scale, var("l", a)))
        if degree >= 2:
            for b in range(a, k):
                terms.append(mul(rng.normal() * scale, var("l", a), var("l", b)))
    return add(*terms)


def random_complex(rng, k, degree=2):
    return ComplexExpr(random_poly(rng, k, degree), random_poly(rng, k, degree))


def random_operator(rng, d_out, d_in, k, degree=2) -> OperatorField:
    return OperatorField(tuple(tuple(random_complex(rng, k, degree) for _ in range(d_in))
                               for _ in range(d_out)))


def random_connection(rng, d, k, degree=1) -> MatrixConnection:
    """Anti-Hermitian ``Γ_j = M_j − M_j*`` with polynomial M_j."""
    gam = []
    for _ in range(k):
        M = random_operator(rng, d, d, k, degree)
        gam.append((M - M.adjoint()).rows())
    return MatrixConnection(d, gam)


def random_vector(rng, d, k, degree=2):
    return [random_complex(rng, k, degree) for _ in range(d)]


def random_base_field(rng, k, degree=2) -> VectorField:
    return VectorField(tuple(random_poly(rng, k, degree) for _ in range(k)), "l")


def rotation_unitary(k: int, d: int = 3) -> OperatorField:
    """Unitary field ``e^{i l1} R_12(l1) R_23(l_k)`` (d = 3) for tests of unitary identities."""
    a = var("l", 0)
    b = var("l", k - 1)
    phase = ComplexExpr(cos(a), sin(a))
    R1 = [[cos(a), mul(-1.0, sin(a)), 0.0], [sin(a), cos(a), 0.0], [0.0, 0.0, 1.0]]
    R2 = [[1.0, 0.0, 0.0], [0.0, cos(b), mul(-1.0, sin(b))], [0.0, sin(b), cos(b)]]
    R = OperatorField(tuple(map(tuple, R1))) @ OperatorField(tuple(map(tuple, R2)))
    if d != 3:
        raise ValueError("rotation_unitary is defined for d = 3")
    return R.scale(phase)
