import random
from fractions import Fraction

import pytest
import sympy

from opinv import linalg


def _rand(rng, m, n, r=None):
    if r is None:
        return [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(n)] for _ in range(m)]
    A = [[rng.randint(-3, 3) for _ in range(r)] for _ in range(m)]
    B = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(r)]
    return linalg.matmul(A, B)


@pytest.mark.parametrize("seed", range(20))
def test_rank_and_det_match_sympy(seed):
    rng = random.Random(seed)
    m, n = rng.randint(1, 6), rng.randint(1, 6)
    A = _rand(rng, m, n, r=rng.randint(0, min(m, n)))
    assert linalg.rank(A) == sympy.Matrix(A).rank()
    S = _rand(rng, 4, 4)
    assert linalg.det(S) == Fraction(str(sympy.Matrix(S).det()))


def test_solve_and_inverse():
    A = [[2, 1], [1, 1]]
    x, ok, nullity = linalg.solve(A, [3, 2])
    assert ok and nullity == 0 and x == [1, 1]
    _, ok, _ = linalg.solve([[1, 1], [1, 1]], [1, 2])
    assert not ok
    inv = linalg.inverse(A)
    assert linalg.matmul(A, inv) == [[1, 0], [0, 1]]
    with pytest.raises(linalg.SingularMatrixError):
        linalg.inverse([[1, 2], [2, 4]])
