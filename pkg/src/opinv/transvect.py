"""Symplectic and metric transvectants.

Symplectic transvectants act on polynomials over ``R^{2n}`` with variables
ordered ``(x_1..x_n, y_1..y_n)`` and structure form ``sum e_i ^ f_i``.
They are computed from the closed coordinate sum

    [P, Q]_r = 2^{-r} sum_{l=0}^{r} sum_{|a|=l} sum_{|b|=r-l}
               (-1)^{r-l} C(r, l) C(l; a) C(r-l; b)
               d^r P / dx^a dy^b * d^r Q / dx^b dy^a

so ``[P, Q]_1`` is half the Poisson bracket.  Both normalizations are
available (:func:`symplectic_transvectant`, :func:`poisson_bracket`).

Metric transvectants use an orthonormal frame:

    (P, Q)_m = sum_{|a|=m} C(m; a) d^a P * d^a Q.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .polyalg import DimensionError, HomogeneousPoly, compositions, multinomial


def _check_pair(P: HomogeneousPoly, Q: HomogeneousPoly, r: int) -> None:
    if P.dim != Q.dim:
        raise DimensionError(f"polynomials over spaces of dimension {P.dim} and {Q.dim}")
    if r < 0:
        raise ValueError(f"transvectant order must be non-negative, got {r}")


def _result_degree(P, Q, r):
    return max(P.degree + Q.degree - 2 * r, 0)


def symplectic_transvectant(P: HomogeneousPoly, Q: HomogeneousPoly, r: int) -> HomogeneousPoly:
    """Order-``r`` symplectic transvectant ``[P, Q]_r``.

    The result has degree ``deg P + deg Q - 2r``; it is the zero polynomial
    (degree clipped at 0) once ``r`` exceeds either degree.
    """
    _check_pair(P, Q, r)
    if P.dim % 2:
        raise DimensionError(f"symplectic space needs even dimension, got {P.dim}")
    deg = _result_degree(P, Q, r)
    if r > min(P.degree, Q.degree) or P.is_zero() or Q.is_zero():
        return HomogeneousPoly(P.dim, deg)
    n = P.dim // 2
    dP: dict = {}
    dQ: dict = {}
    out = HomogeneousPoly(P.dim, deg)
    for l in range(r + 1):
        sign_binom = (-1) ** (r - l) * math.comb(r, l)
        for a in compositions(l, n):
            ca = multinomial(a)
            for b in compositions(r - l, n):
                kp = a + b
                kq = b + a
                if kp not in dP:
                    dP[kp] = P.diff_multi(kp)
                if kq not in dQ:
                    dQ[kq] = Q.diff_multi(kq)
                if dP[kp].is_zero() or dQ[kq].is_zero():
                    continue
                out = out + (dP[kp] * dQ[kq]).scale(sign_binom * ca * multinomial(b))
    return out.scale(Fraction(1, 2**r))


def poisson_bracket(P: HomogeneousPoly, Q: HomogeneousPoly) -> HomogeneousPoly:
    """``sum_i dP/dx_i dQ/dy_i - dP/dy_i dQ/dx_i``; equals ``2 [P, Q]_1``."""
    _check_pair(P, Q, 0)
    if P.dim % 2:
        raise DimensionError(f"symplectic space needs even dimension, got {P.dim}")
    n = P.dim // 2
    deg = max(P.degree + Q.degree - 2, 0)
    out = HomogeneousPoly(P.dim, deg)
    if P.degree == 0 or Q.degree == 0:
        return out
    for i in range(n):
        out = out + P.diff(i) * Q.diff(n + i) - P.diff(n + i) * Q.diff(i)
    return out


def metric_transvectant(P: HomogeneousPoly, Q: HomogeneousPoly, m: int) -> HomogeneousPoly:
    """Order-``m`` metric transvectant ``(P, Q)_m`` in orthonormal coordinates."""
    _check_pair(P, Q, m)
    deg = _result_degree(P, Q, m)
    if m > min(P.degree, Q.degree) or P.is_zero() or Q.is_zero():
        return HomogeneousPoly(P.dim, deg)
    out = HomogeneousPoly(P.dim, deg)
    for a in compositions(m, P.dim):
        dp = P.diff_multi(a)
        if dp.is_zero():
            continue
        dq = Q.diff_multi(a)
        if dq.is_zero():
            continue
        out = out + (dp * dq).scale(multinomial(a))
    return out


def transvectant(P: HomogeneousPoly, Q: HomogeneousPoly, r: int, kind: str = "symplectic"):
    if kind == "symplectic":
        return symplectic_transvectant(P, Q, r)
    if kind == "metric":
        return metric_transvectant(P, Q, r)
    raise ValueError(f"unknown transvectant kind {kind!r}")
