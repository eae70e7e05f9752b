"""Operators, charts and grids shared by the model-surface tests."""

from fractions import Fraction
from itertools import product

from opinv.connect import DiffOperator
from opinv.models import model_surface, symbol_invariant_field, transport_operator
from opinv.polyalg import Polynomial

X = [Polynomial.variable(2, i) for i in range(2)]
ONE = Polynomial.constant(2, 1)

LABELS_D2 = ["J_{2,2}", "J_{3,2}"]
G_D2, C_D2 = [[2, 0], [0, Fraction(1, 2)]], [Fraction(1, 2), -1]

LABELS_D4 = ["J_{2,2}", "J_{3,2}", "J_{4,2}", "J_{5,2}"]
GRID_D4 = [[Fraction(1, 5), Fraction(2, 5)], [Fraction(1, 5), Fraction(2, 5)],
           [Fraction(1, 5), Fraction(3, 5)], [Fraction(2, 5), Fraction(3, 5)]]
# symplectic: x1 += x3 in Darboux order (x1, x2, y1, y2)
SYMPLECTIC_D4 = ([[1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], [1, 0, 0, Fraction(1, 3)])
# volume preserving but not symplectic
VOLUME_D4 = ([[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, Fraction(1, 2)]], [0, 0, 0, 0])


def chart(A, labels):
    return [symbol_invariant_field(A, lab) for lab in labels]


def box(axes):
    return list(product(*axes))


def lin(lo, hi, n):
    lo, hi = Fraction(lo), Fraction(hi)
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def operator_d2():
    return DiffOperator(2, 4, {(4, 0): ONE, (2, 2): X[0], (0, 4): X[1] + 1,
                               (1, 0): X[0] * X[1], (0, 0): X[1]})


def surfaces_d2(shift=0):
    """``A`` and its image under ``x -> G_D2 x + C_D2`` (optionally with a shifted constant term)."""
    A = operator_d2()
    B = transport_operator(A, G_D2, C_D2)
    if shift:
        B = B + DiffOperator(2, 4, {(0, 0): shift})
    grid_a = box([lin(1, Fraction(7, 4), 4)] * 2)
    grid_b = box([lin(Fraction(5, 2), 4, 4), lin(Fraction(-1, 2), Fraction(-1, 8), 4)])
    return model_surface(A, chart(A, LABELS_D2), grid_a), model_surface(B, chart(B, LABELS_D2), grid_b)


def operator_d4():
    d = 4
    x = [Polynomial.variable(d, i) for i in range(d)]
    one = Polynomial.constant(d, 1)
    # the extra monomials break a torus symmetry that would make the chart degenerate
    return DiffOperator(d, 4, {
        (2, 0, 0, 2): x[0] + 2, (0, 4, 0, 0): x[1] + 3, (0, 0, 4, 0): x[2] + 1,
        (0, 2, 2, 0): x[3] + 1, (1, 1, 1, 1): one, (0, 3, 1, 0): one, (1, 0, 2, 1): one,
        (0, 1, 3, 0): one, (1, 0, 0, 0): x[1], (0, 0, 0, 0): x[0] * x[3],
    })


def surfaces_d4(G, c):
    A = operator_d4()
    B = transport_operator(A, G, c)
    image = [tuple(sum(Fraction(G[i][j]) * p[j] for j in range(4)) + Fraction(c[i]) for i in range(4))
             for p in box(GRID_D4)]
    return (model_surface(A, chart(A, LABELS_D4), box(GRID_D4)),
            model_surface(B, chart(B, LABELS_D4), image))
