import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import random_poly

from opinv.polyalg import (
    DimensionError,
    HomogeneousPoly,
    LinearMap,
    Polynomial,
    SingularMapError,
    canonical_form_matrix,
    linear_substitute,
    monomial_basis,
    partial_derivative,
    poly_mul,
    substitution_matrix,
)

x = HomogeneousPoly.monomial((1, 0))
y = HomogeneousPoly.monomial((0, 1))


def test_poly_mul_examples():
    assert poly_mul(x, y) == HomogeneousPoly.monomial((1, 1))
    assert poly_mul(x + y, x - y) == HomogeneousPoly(2, 2, {(2, 0): 1, (0, 2): -1})
    zero = HomogeneousPoly(2, 3)
    assert poly_mul(zero, x).is_zero()
    assert poly_mul(zero, x).degree == 4


def test_poly_mul_dimension_mismatch():
    with pytest.raises(DimensionError):
        poly_mul(x, HomogeneousPoly.monomial((1, 0, 0)))


def test_partial_derivative_examples():
    p = HomogeneousPoly.monomial((2, 1))
    assert partial_derivative(p, 1) == HomogeneousPoly(2, 2, {(1, 1): 2})
    assert partial_derivative(HomogeneousPoly.monomial((0, 3)), 1).is_zero()
    assert partial_derivative(partial_derivative(p, 1), 2) == partial_derivative(partial_derivative(p, 2), 1)
    assert partial_derivative(partial_derivative(p, 1), 2) == HomogeneousPoly(2, 1, {(1, 0): 2})
    with pytest.raises((IndexError, ValueError)):
        partial_derivative(p, 3)
    c = HomogeneousPoly(2, 0, {(0, 0): 7})
    d = partial_derivative(c, 1)
    assert d.is_zero() and d.degree == 0


def test_mixed_degree_rejected():
    with pytest.raises(ValueError):
        HomogeneousPoly(2, 2, {(1, 0): 1})


def test_zero_coefficients_not_stored():
    p = HomogeneousPoly(2, 2, {(2, 0): 1, (1, 1): 0})
    assert p.coeffs == {(2, 0): Fraction(1)}
    assert p - p == HomogeneousPoly(2, 2)


def test_monomial_basis():
    assert monomial_basis(2, 1) == [(1, 0), (0, 1)]
    assert monomial_basis(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(monomial_basis(4, 3)) == 20
    for d in range(1, 7):
        for k in range(7):
            basis = monomial_basis(d, k)
            assert len(basis) == math.comb(d + k - 1, k)
            assert len(set(basis)) == len(basis)


def test_linear_substitute_examples():
    P = HomogeneousPoly(2, 3, {(2, 1): 1, (0, 3): 1})
    assert linear_substitute(P, LinearMap.identity(2)) == P
    swap = LinearMap(((0, 1), (1, 0)))
    assert linear_substitute(HomogeneousPoly.monomial((2, 0)), swap) == HomogeneousPoly.monomial((0, 2))
    g = LinearMap(((2, 1), (Fraction(1, 3), 5)))
    back = linear_substitute(linear_substitute(P, g), g.inverse())
    assert back == P


def test_singular_map_rejected():
    with pytest.raises(SingularMapError):
        linear_substitute(x, LinearMap(((1, 2), (2, 4))))


def test_left_action():
    rng = random.Random(3)
    P = random_poly(rng, 2, 3)
    g = LinearMap(((1, 2), (0, 1)))
    h = LinearMap(((1, 0), (-3, 1)))
    assert linear_substitute(P, g @ h) == linear_substitute(linear_substitute(P, h), g)


def _rand_map(rng, d):
    while True:
        m = [[Fraction(rng.randint(-3, 3)) for _ in range(d)] for _ in range(d)]
        if abs(np.linalg.det(np.array(m, dtype=float))) > 0.5:
            return LinearMap(tuple(tuple(r) for r in m))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(0, 4))
def test_substitution_is_multiplicative(seed, d, k):
    rng = random.Random(seed)
    P, Q = random_poly(rng, d, k), random_poly(rng, d, 2)
    g = _rand_map(rng, d)
    assert linear_substitute(poly_mul(P, Q), g) == poly_mul(linear_substitute(P, g), linear_substitute(Q, g))
    R = random_poly(rng, d, 2)
    assert poly_mul(P, Q + R) == poly_mul(P, Q) + poly_mul(P, R)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4))
def test_chain_rule(seed, d, k):
    rng = random.Random(seed)
    P = random_poly(rng, d, k)
    g = _rand_map(rng, d)
    ginv = g.inverse().matrix
    lhs_all = [partial_derivative(linear_substitute(P, g), i + 1) for i in range(d)]
    for i in range(d):
        rhs = HomogeneousPoly(d, k - 1)
        for j in range(d):
            rhs = rhs + linear_substitute(partial_derivative(P, j + 1), g).scale(ginv[j][i])
        assert lhs_all[i] == rhs


def test_float_substitution_matches_exact():
    rng = random.Random(5)
    P = random_poly(rng, 4, 3)
    g = _rand_map(rng, 4)
    exact = linear_substitute(P, g)
    ginv = np.linalg.inv(g.to_array())
    vec = substitution_matrix(ginv, 3) @ np.array([float(c) for c in P.to_vector()])
    assert np.allclose(vec, [float(c) for c in exact.to_vector()], atol=1e-9)


def test_symplectic_check():
    J = canonical_form_matrix(1)
    assert J == [[0, 1], [-1, 0]]
    assert LinearMap(((1, 3), (0, 1))).is_symplectic()
    assert not LinearMap(((2, 0), (0, 1))).is_symplectic()


def test_base_polynomial_arithmetic():
    a = Polynomial(2, {(1, 0): 1, (0, 0): 2})
    assert (a * a).evaluate((1, 1)) == 9
    assert a.substitute_affine([[1, 0], [0, 1]], [1, 0]) == Polynomial(2, {(1, 0): 1, (0, 0): 3})
    assert a + 1 == Polynomial(2, {(1, 0): 1, (0, 0): 3})
