import math
import random
from fractions import Fraction

import pytest
import sympy
from model_cases import (
    LABELS_D2,
    ONE,
    SYMPLECTIC_D4,
    VOLUME_D4,
    X,
    box,
    chart,
    lin,
    operator_d2,
    surfaces_d2,
    surfaces_d4,
)
from oracles import random_base_poly

from opinv.connect import DiffOperator, base_symbols, to_sympy
from opinv.models import (
    COINCIDE,
    INCONCLUSIVE,
    MODELS_DISTINCT,
    ChartMismatch,
    InvariantField,
    NotAdjusted,
    apply_operator,
    coefficient_indices,
    identity_chart,
    model_coefficients,
    model_compare,
    model_surface,
    transport_function,
    transport_operator,
)
from opinv.polyalg import DimensionError, Polynomial


def _random_operator(rng, d, k, deg=2):
    return DiffOperator(d, k, {a: random_base_poly(rng, d, deg, density=0.6)
                               for a in coefficient_indices(d, k) if rng.random() < 0.7})


@pytest.mark.parametrize("seed", range(10))
def test_identity_chart_law(seed):
    rng = random.Random(seed)
    A = _random_operator(rng, 2, rng.randint(0, 3))
    I = model_coefficients(A, identity_chart(2))
    for alpha in coefficient_indices(2, A.order):
        assert I[alpha] == A.coefficient(alpha)


def test_centered_coefficients_against_sympy():
    rng = random.Random(3)
    A = _random_operator(rng, 2, 2)
    fields = [InvariantField("u", X[0] + X[1] * X[1]), InvariantField("v", X[1] + X[0] * X[0] * X[1])]
    I = model_coefficients(A, fields)
    xs = base_symbols(2)
    p = sympy.symbols("p1 p2")
    u = [to_sympy(f.value, 2) for f in fields]
    at_p = {xs[0]: p[0], xs[1]: p[1]}
    for alpha in coefficient_indices(2, 2):
        f = sympy.Mul(*[(u[i] - u[i].subs(at_p)) ** alpha[i] for i in range(2)])
        Af = 0
        for beta, a in A.items():
            Af += to_sympy(a, 2) * sympy.diff(f, *[xs[i] for i in range(2) for _ in range(beta[i])]) \
                if any(beta) else to_sympy(a, 2) * f
        want = (Af / (math.factorial(alpha[0]) * math.factorial(alpha[1]))).subs({p[0]: xs[0], p[1]: xs[1]})
        assert sympy.expand(want - to_sympy(I[alpha], 2)) == 0


def test_apply_operator():
    A = DiffOperator(2, 2, {(2, 0): ONE, (0, 1): X[0], (0, 0): 3})
    f = X[0] * X[0] * X[1]
    assert apply_operator(A, f) == X[1].scale(2) + X[0] * X[0] * X[0] + f.scale(3)
    with pytest.raises(DimensionError):
        apply_operator(A, Polynomial.variable(3, 0))


def test_transport_intertwines_action():
    rng = random.Random(11)
    A = _random_operator(rng, 2, 3)
    G, c = [[1, 2], [0, 1]], [Fraction(1, 3), -2]
    B = transport_operator(A, G, c)
    for _ in range(3):
        f = random_base_poly(rng, 2, 3)
        assert apply_operator(B, transport_function(f, G, c)) == transport_function(apply_operator(A, f), G, c)


def test_invariance_of_model_coefficients():
    A = operator_d2()
    G, c = [[1, 1], [0, 1]], [2, Fraction(-1, 2)]
    B = transport_operator(A, G, c)
    labels = ["J_{2,2}", "J_{3,2}"]
    IA, IB = model_coefficients(A, chart(A, labels)), model_coefficients(B, chart(B, labels))
    for alpha in IA:
        assert transport_function(IA[alpha], G, c) == IB[alpha]


def test_not_adjusted():
    A = operator_d2()
    with pytest.raises(NotAdjusted):
        model_coefficients(A, [InvariantField("a", X[0]), InvariantField("b", X[0].scale(2))])
    with pytest.raises(NotAdjusted):
        model_coefficients(A, identity_chart(2)[:1])
    folded = [InvariantField("a", X[0] * X[0]), InvariantField("b", X[1])]
    with pytest.raises(NotAdjusted):
        model_surface(A, folded, [(0, 1)])
    with pytest.raises(NotAdjusted):
        model_surface(A, folded, [(1, 1), (-1, 1)])
    with pytest.raises(ValueError):
        model_surface(A, identity_chart(2), [])


def test_surface_is_exact_and_sorted():
    A = operator_d2()
    S = model_surface(A, identity_chart(2), box([lin(0, 1, 3), lin(0, 1, 3)]))
    assert all(isinstance(v, Fraction) for s in S.samples for v in s[1])
    ys = [s[1] for s in S.samples]
    assert ys == sorted(ys)


def test_planted_affine_equivalence_d2():
    SA, SB = surfaces_d2()
    v = model_compare(SA, SB)
    assert v.status == COINCIDE
    assert v.omega_residual <= 1e-6
    assert v.matched == len(SA.samples)
    assert model_compare(SB, SA).status == COINCIDE
    for x, z in v.psi:
        want = [2 * x[0] + 0.5, 0.5 * x[1] - 1]
        assert max(abs(a - b) for a, b in zip(z, want)) < 1e-8


def test_shifted_operator_is_distinct():
    SA, SB = surfaces_d2(shift=1)
    v = model_compare(SA, SB)
    assert v.status == MODELS_DISTINCT and v.witness["kind"] == "model"
    assert model_compare(SB, SA).status == MODELS_DISTINCT


def test_disjoint_ranges_inconclusive():
    A = operator_d2()
    fields = chart(A, LABELS_D2)
    SA = model_surface(A, fields, box([lin(1, 2, 3)] * 2))
    SB = model_surface(A, fields, box([lin(5, 6, 3)] * 2))
    v = model_compare(SA, SB)
    assert v.status == INCONCLUSIVE and v.reason


def test_chart_mismatch():
    A = operator_d2()
    grid = box([lin(1, 2, 3)] * 2)
    SA = model_surface(A, chart(A, LABELS_D2), grid)
    SB = model_surface(A, identity_chart(2), grid)
    with pytest.raises(ChartMismatch):
        model_compare(SA, SB)


@pytest.mark.slow
def test_d4_volume_preserving_non_symplectic_rejected():
    SA, SB = surfaces_d4(*VOLUME_D4)
    v = model_compare(SA, SB)
    assert v.status == MODELS_DISTINCT
    assert v.witness["kind"] == "lie"
    assert v.omega_residual > 0.5


@pytest.mark.slow
def test_d4_symplectic_coincide():
    SA, SB = surfaces_d4(*SYMPLECTIC_D4)
    v = model_compare(SA, SB)
    assert v.status == COINCIDE
    assert v.omega_residual <= 1e-6
