import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import omega_hat_transvectant, poisson_oracle, random_poly

from opinv.polyalg import DimensionError, HomogeneousPoly, LinearMap, linear_substitute
from opinv.transvect import (
    metric_transvectant,
    poisson_bracket,
    symplectic_transvectant,
    transvectant,
)

X2 = HomogeneousPoly.monomial((2, 0))
Y2 = HomogeneousPoly.monomial((0, 2))


def test_hand_values_against_oracle():
    assert omega_hat_transvectant(X2, Y2, 1) == HomogeneousPoly(2, 2, {(1, 1): 2})
    assert omega_hat_transvectant(X2, Y2, 2) == HomogeneousPoly(2, 0, {(0, 0): 1})
    assert symplectic_transvectant(X2, Y2, 1) == HomogeneousPoly(2, 2, {(1, 1): 2})
    assert symplectic_transvectant(X2, Y2, 2) == HomogeneousPoly(2, 0, {(0, 0): 1})


def test_order_zero_is_product():
    rng = random.Random(0)
    P, Q = random_poly(rng, 4, 2), random_poly(rng, 4, 3)
    assert symplectic_transvectant(P, Q, 0) == P * Q


def test_trivial_above_min_degree():
    rng = random.Random(1)
    P, Q = random_poly(rng, 2, 2), random_poly(rng, 2, 4)
    R = symplectic_transvectant(P, Q, 3)
    assert R.is_zero() and R.degree == 0


def test_errors():
    with pytest.raises(DimensionError):
        symplectic_transvectant(X2, HomogeneousPoly.monomial((1, 1, 0, 0)), 1)
    with pytest.raises(ValueError):
        symplectic_transvectant(X2, Y2, -1)
    with pytest.raises(DimensionError):
        symplectic_transvectant(HomogeneousPoly.monomial((1, 0, 0)), HomogeneousPoly.monomial((0, 1, 0)), 1)
    with pytest.raises(ValueError):
        transvectant(X2, Y2, 1, "bogus")


def test_poisson_examples():
    x, y = HomogeneousPoly.monomial((1, 0)), HomogeneousPoly.monomial((0, 1))
    assert poisson_bracket(x, y) == HomogeneousPoly(2, 0, {(0, 0): 1})
    rng = random.Random(2)
    P = random_poly(rng, 4, 3)
    assert poisson_bracket(P, P).is_zero()


def test_poisson_is_twice_first_transvectant():
    rng = random.Random(4)
    for _ in range(10):
        P, Q = random_poly(rng, 4, 3), random_poly(rng, 4, 2)
        assert poisson_bracket(P, Q) == symplectic_transvectant(P, Q, 1).scale(2)
        assert poisson_bracket(P, Q) == poisson_oracle(P, Q)


def test_jacobi_identity():
    rng = random.Random(7)
    for d in (2, 4):
        P, Q, R = (random_poly(rng, d, 3) for _ in range(3))
        total = (poisson_bracket(P, poisson_bracket(Q, R)) + poisson_bracket(Q, poisson_bracket(R, P))
                 + poisson_bracket(R, poisson_bracket(P, Q)))
        assert total.is_zero()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 4]), st.integers(0, 4), st.integers(0, 4), st.integers(0, 5))
def test_parity_and_degree(seed, d, p, q, r):
    rng = random.Random(seed)
    P, Q = random_poly(rng, d, p), random_poly(rng, d, q)
    R = symplectic_transvectant(P, Q, r)
    assert R == symplectic_transvectant(Q, P, r).scale((-1) ** r)
    if not R.is_zero():
        assert R.degree == p + q - 2 * r


SHEARS = [((1, 1), (0, 1)), ((1, 0), (-2, 1)), ((0, 1), (-1, 0))]


@pytest.mark.parametrize("g", SHEARS)
def test_equivariance_d2(g):
    rng = random.Random(11)
    g = LinearMap(g)
    assert g.is_symplectic()
    for r in range(4):
        P, Q = random_poly(rng, 2, 3), random_poly(rng, 2, 4)
        lhs = linear_substitute(symplectic_transvectant(P, Q, r), g)
        assert lhs == symplectic_transvectant(linear_substitute(P, g), linear_substitute(Q, g), r)


def test_equivariance_d4():
    g = LinearMap(((1, 0, 1, 2), (0, 1, 2, 0), (0, 0, 1, 0), (0, 0, 0, 1)))
    assert g.is_symplectic()
    rng = random.Random(12)
    for r in range(4):
        P, Q = random_poly(rng, 4, 3), random_poly(rng, 4, 3)
        lhs = linear_substitute(symplectic_transvectant(P, Q, r), g)
        assert lhs == symplectic_transvectant(linear_substitute(P, g), linear_substitute(Q, g), r)


def test_metric_examples():
    assert metric_transvectant(X2, X2, 2) == HomogeneousPoly(2, 0, {(0, 0): 4})
    x, y = HomogeneousPoly.monomial((1, 0)), HomogeneousPoly.monomial((0, 1))
    assert metric_transvectant(x, y, 1).is_zero()
    s = X2 + Y2
    assert metric_transvectant(s, s, 1) == HomogeneousPoly(2, 2, {(2, 0): 4, (0, 2): 4})


def test_metric_symmetry_and_signed_permutations():
    rng = random.Random(13)
    g = LinearMap(((0, -1, 0), (1, 0, 0), (0, 0, -1)))
    for m in range(4):
        P, Q = random_poly(rng, 3, 3), random_poly(rng, 3, 4)
        assert metric_transvectant(P, Q, m) == metric_transvectant(Q, P, m)
        lhs = linear_substitute(metric_transvectant(P, Q, m), g)
        assert lhs == metric_transvectant(linear_substitute(P, g), linear_substitute(Q, g), m)


def test_oracle_small_batch():
    rng = random.Random(21)
    for _ in range(15):
        d = rng.choice((2, 4))
        P, Q = random_poly(rng, d, rng.randint(0, 4)), random_poly(rng, d, rng.randint(0, 4))
        r = rng.randint(0, 4)
        assert symplectic_transvectant(P, Q, r) == omega_hat_transvectant(P, Q, r)


def test_half_integer_coefficients_are_exact():
    R = symplectic_transvectant(HomogeneousPoly.monomial((1, 0)), HomogeneousPoly.monomial((0, 1)), 1)
    assert R.coefficient((0, 0)) == Fraction(1, 2)
