"""Small exact linear algebra over the rationals.

Rank and determinant use fraction-free (Bareiss) elimination on integer
rows; solving uses Gauss-Jordan with ``Fraction``.  Matrices are lists of
rows.  Floats are routed to numpy by the callers, not here.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from fractions import Fraction

import numpy as np


class SingularMatrixError(ValueError):
    pass


def _integer_rows(rows: Sequence[Sequence]) -> list:
    out = []
    for row in rows:
        row = [Fraction(v) for v in row]
        den = 1
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
        out.append([int(v * den) for v in row])
    return out


def _bareiss(a: list) -> tuple:
    """In-place fraction-free elimination; returns (rank, sign, last pivot)."""
    m = len(a)
    n = len(a[0]) if m else 0
    rank, sign, prev = 0, 1, 1
    for col in range(n):
        pivot = next((r for r in range(rank, m) if a[r][col] != 0), None)
        if pivot is None:
            continue
        if pivot != rank:
            a[rank], a[pivot] = a[pivot], a[rank]
            sign = -sign
        p = a[rank][col]
        for r in range(rank + 1, m):
            f = a[r][col]
            row_r, row_p = a[r], a[rank]
            for c in range(col, n):
                row_r[c] = (row_r[c] * p - f * row_p[c]) // prev
        prev = p
        rank += 1
        if rank == m:
            break
    return rank, sign, prev


def rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a rational matrix."""
    if not rows or not len(rows[0]):
        return 0
    return _bareiss(_integer_rows(rows))[0]


def det(rows: Sequence[Sequence]) -> Fraction:
    n = len(rows)
    if n == 0:
        return Fraction(1)
    scaled = []
    scale = Fraction(1)
    for row in rows:
        row = [Fraction(v) for v in row]
        den = 1
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
        scale /= den
        scaled.append([int(v * den) for v in row])
    r, sign, last = _bareiss(scaled)
    if r < n:
        return Fraction(0)
    return sign * last * scale


def rref(rows: Sequence[Sequence]) -> tuple:
    """Reduced row echelon form and pivot columns (``Fraction``)."""
    a = [[Fraction(v) for v in row] for row in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    pivots = []
    r = 0
    for col in range(n):
        pivot = next((i for i in range(r, m) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = 1 / a[r][col]
        a[r] = [v * inv for v in a[r]]
        for i in range(m):
            if i != r and a[i][col] != 0:
                f = a[i][col]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(col)
        r += 1
        if r == m:
            break
    return a, pivots


def solve(A: Sequence[Sequence], b: Sequence) -> tuple:
    """Solve ``A x = b`` exactly.

    Returns ``(x, consistent, nullity)``.  When the system is inconsistent
    ``x`` is ``None``; free variables are set to zero otherwise.
    """
    n = len(A[0]) if A else 0
    aug = [list(row) + [bv] for row, bv in zip(A, b)]
    red, pivots = rref(aug)
    if n in pivots:
        return None, False, n - (len(pivots) - 1)
    x = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        x[col] = red[i][n]
    return x, True, n - len(pivots)


def inverse(A: Sequence[Sequence]) -> list:
    n = len(A)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return [row[n:] for row in red]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list:
    cols = list(zip(*B))
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols] for row in A]


def numeric_rank(M: np.ndarray, rtol: float = 1e-9) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))
