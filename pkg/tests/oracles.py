"""Independent reference computations, written with sympy only.

Nothing here calls the package's transvectant, trace or quantization code;
conversions to and from the package types are the only shared surface.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

import sympy

from opinv.polyalg import HomogeneousPoly, Polynomial, monomial_basis


def symbols(d):
    return sympy.symbols(f"v0:{d}")


def to_expr(P, xs):
    return sympy.Add(*[sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[x**k for x, k in zip(xs, e)])
                       for e, c in P.coeffs.items()])


def from_expr(expr, xs, degree):
    expr = sympy.expand(expr)
    d = len(xs)
    if expr == 0:
        return HomogeneousPoly(d, degree)
    poly = sympy.Poly(expr, *xs)
    return HomogeneousPoly(d, degree, {e: Fraction(int(c.p), int(c.q)) for e, c in poly.terms()})


def omega_hat_transvectant(P, Q, r):
    """``mu(omega_hat^r (P (x) Q))`` with ``omega_hat = 1/2 sum (d_xi (x) d_yi - d_yi (x) d_xi)``.

    The tensor is a dict ``(left expr, right expr) -> coefficient``; each step
    applies the bi-derivation literally, then ``mu`` multiplies.
    """
    d = P.dim
    n = d // 2
    xs = symbols(d)
    state = {(to_expr(P, xs), to_expr(Q, xs)): sympy.Integer(1)}
    half = sympy.Rational(1, 2)
    for _ in range(r):
        new = {}
        for (a, b), c in state.items():
            for i in range(n):
                for (u, v, s) in ((xs[i], xs[n + i], half), (xs[n + i], xs[i], -half)):
                    da, db = sympy.diff(a, u), sympy.diff(b, v)
                    if da == 0 or db == 0:
                        continue
                    key = (da, db)
                    new[key] = new.get(key, 0) + c * s
        state = {k: v for k, v in new.items() if v != 0}
    total = sympy.Add(*[c * a * b for (a, b), c in state.items()])
    return from_expr(total, xs, max(P.degree + Q.degree - 2 * r, 0))


def poisson_oracle(P, Q):
    d = P.dim
    n = d // 2
    xs = symbols(d)
    a, b = to_expr(P, xs), to_expr(Q, xs)
    expr = sum(sympy.diff(a, xs[i]) * sympy.diff(b, xs[n + i]) - sympy.diff(a, xs[n + i]) * sympy.diff(b, xs[i])
               for i in range(n))
    return from_expr(expr, xs, max(P.degree + Q.degree - 2, 0))


def operator_matrix_oracle(P, q, r):
    """Matrix of ``Q -> omega_hat^r``-transvectant on degree-``q`` monomials (sympy Matrix)."""
    basis = monomial_basis(P.dim, q)
    cols = []
    for e in basis:
        img = omega_hat_transvectant(P, HomogeneousPoly.monomial(e), r)
        cols.append([sympy.Rational(img.coefficient(f).numerator, img.coefficient(f).denominator)
                     for f in basis])
    return sympy.Matrix(cols).T


def trace_powers_oracle(M, kmax):
    out, Mk = [], sympy.eye(M.shape[0])
    for _ in range(kmax):
        Mk = Mk * M
        out.append(Mk.trace())
    return out


def flat_ds_power(f: Polynomial, k: int) -> HomogeneousPoly:
    """Direct formula: ``(d^s)^k f = sum_{|a|=k} (k!/a!) d^a f eta^a`` (flat)."""
    d = f.dim
    coeffs = {}
    for a in monomial_basis(d, k):
        xs = symbols(d)
        expr = sympy.diff(to_expr(f, xs), *[x for x, m in zip(xs, a) for _ in range(m)]) if k else to_expr(f, xs)
        w = sympy.Integer(math.factorial(k)) / sympy.Mul(*[sympy.factorial(m) for m in a])
        expr = sympy.expand(w * expr)
        if expr != 0:
            poly = sympy.Poly(expr, *xs)
            coeffs[a] = Polynomial(d, {e: Fraction(int(c.p), int(c.q)) for e, c in poly.terms()})
    return HomogeneousPoly(d, k, coeffs)


def random_poly(rng: random.Random, d: int, k: int, lo=-5, hi=5, density=0.7) -> HomogeneousPoly:
    terms = {e: rng.randint(lo, hi) for e in monomial_basis(d, k) if rng.random() < density}
    return HomogeneousPoly(d, k, terms)


def random_base_poly(rng: random.Random, d: int, deg: int, lo=-3, hi=3, density=0.5) -> Polynomial:
    terms = {e: rng.randint(lo, hi) for m in range(deg + 1) for e in monomial_basis(d, m)
             if rng.random() < density}
    return Polynomial(d, terms)


def frame_field(sigma0: HomogeneousPoly, g_inverse) -> HomogeneousPoly:
    """``xi -> sigma0(g(a)^{-1} xi)`` for a polynomial matrix ``g(a)^{-1}`` (rows of base polynomials)."""
    d = sigma0.dim
    lin = [HomogeneousPoly(d, 1, {tuple(int(t == j) for t in range(d)): g_inverse[r][j] for j in range(d)})
           for r in range(d)]
    out = HomogeneousPoly(d, sigma0.degree)
    for e, c in sigma0.coeffs.items():
        term = HomogeneousPoly(d, 0, {(0,) * d: Polynomial.constant(d, c)})
        for r, m in enumerate(e):
            for _ in range(m):
                term = term * lin[r]
        out = out + term
    return out
