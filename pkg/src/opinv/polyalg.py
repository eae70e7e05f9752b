"""Sparse multivariate polynomials with exact rational coefficients.

Two flavours share one implementation:

* :class:`Polynomial` -- arbitrary (non-homogeneous) polynomial, used for
  coefficients that depend on base coordinates.
* :class:`HomogeneousPoly` -- every stored monomial has the declared degree.
  Symbols of differential operators live here.

Coefficients are ``Fraction`` by default.  Floats are accepted (they appear
when a group element comes out of a matrix exponential) and so are other
ring elements such as a base :class:`Polynomial`, which is how symbol fields
with base-dependent coefficients are represented.

Monomials are exponent tuples.  The ordering used everywhere is graded
lexicographic: ``x^2 > xy > y^2``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cache

import numpy as np

MultiIndex = tuple  # tuple[int, ...]


class DimensionError(ValueError):
    pass


class SingularMapError(ValueError):
    pass


def _coerce(c):
    if isinstance(c, bool):
        return Fraction(int(c))
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, np.integer):
        return Fraction(int(c))
    if isinstance(c, np.floating):
        return float(c)
    return c


def _is_zero(c) -> bool:
    if isinstance(c, (Fraction, int, float)):
        return c == 0
    if isinstance(c, Polynomial):
        return c.is_zero()
    return c == 0


# -- multi-indices ---------------------------------------------------------


@cache
def compositions(total: int, parts: int) -> tuple:
    """All tuples of ``parts`` non-negative ints summing to ``total``, graded-lex."""
    if parts == 0:
        return ((),) if total == 0 else ()
    if parts == 1:
        return ((total,),)
    out = []
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def monomial_basis(d: int, k: int) -> list:
    """Exponent tuples of the degree-``k`` monomials in ``d`` variables.

    Graded-lex order, ``C(d+k-1, k)`` entries.

    >>> monomial_basis(2, 2)
    [(2, 0), (1, 1), (0, 2)]
    """
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    return list(compositions(k, d))


@cache
def basis_index(d: int, k: int) -> dict:
    return {e: i for i, e in enumerate(compositions(k, d))}


def multinomial(parts: Sequence[int]) -> int:
    out, total = 1, 0
    for p in parts:
        total += p
        out *= math.comb(total, p)
    return out


def factorial_multi(alpha: Sequence[int]) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def graded_lex_key(e: tuple):
    return (-sum(e), tuple(-x for x in e))


def unit_vector(d: int, i: int) -> tuple:
    return tuple(1 if j == i else 0 for j in range(d))


def _add_exp(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


# -- polynomials -----------------------------------------------------------


class Polynomial:
    """Immutable sparse polynomial in ``dim`` variables."""

    __slots__ = ("_coeffs", "_hash", "dim")

    def __init__(self, dim: int, coeffs: Mapping | Iterable | None = None):
        if dim < 0:
            raise DimensionError(f"negative dimension {dim}")
        self.dim = dim
        items = coeffs.items() if isinstance(coeffs, Mapping) else (coeffs or ())
        acc: dict = {}
        for e, c in items:
            e = tuple(int(x) for x in e)
            if len(e) != dim:
                raise DimensionError(f"exponent {e} has length {len(e)}, expected {dim}")
            if any(x < 0 for x in e):
                raise ValueError(f"negative exponent in {e}")
            c = _coerce(c)
            acc[e] = acc[e] + c if e in acc else c
        self._coeffs = {e: c for e, c in acc.items() if not _is_zero(c)}
        self._hash = None
        self._validate()

    def _validate(self) -> None:
        pass

    # construction helpers

    @classmethod
    def constant(cls, dim: int, c=1) -> Polynomial:
        return Polynomial(dim, {(0,) * dim: c})

    @classmethod
    def variable(cls, dim: int, i: int) -> Polynomial:
        return Polynomial(dim, {unit_vector(dim, i): 1})

    def _new(self, coeffs, degree=None):
        return Polynomial(self.dim, coeffs)

    # mapping-like access

    @property
    def coeffs(self) -> dict:
        return dict(self._coeffs)

    def terms(self) -> list:
        """``(exponent, coefficient)`` pairs in graded-lex order."""
        return sorted(self._coeffs.items(), key=lambda t: graded_lex_key(t[0]))

    def coefficient(self, e) -> object:
        return self._coeffs.get(tuple(e), Fraction(0))

    def is_zero(self) -> bool:
        return not self._coeffs

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __len__(self) -> int:
        return len(self._coeffs)

    def total_degree(self) -> int:
        return max((sum(e) for e in self._coeffs), default=0)

    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self._coeffs.values())

    # arithmetic

    def _same_space(self, other: Polynomial) -> None:
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def _degree_for_add(self, other):
        return None

    def __add__(self, other):
        if isinstance(other, Polynomial):
            if type(other) is not type(self):
                if isinstance(self, HomogeneousPoly):
                    raise TypeError("cannot add a ring element to a homogeneous polynomial")
                return NotImplemented
            self._same_space(other)
            out = dict(self._coeffs)
            for e, c in other._coeffs.items():
                out[e] = out[e] + c if e in out else c
            return self._new(out, self._degree_for_add(other))
        c = _coerce(other)
        if _is_zero(c):
            return self
        if isinstance(self, HomogeneousPoly) and self.degree != 0:
            raise TypeError("cannot add a constant to a homogeneous polynomial of positive degree")
        zero = (0,) * self.dim
        out = dict(self._coeffs)
        out[zero] = out[zero] + c if zero in out else c
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new({e: -c for e, c in self._coeffs.items()}, getattr(self, "degree", None))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        """Multiply every coefficient by the ring element ``c``."""
        c = _coerce(c)
        return self._new({e: c * v for e, v in self._coeffs.items()}, getattr(self, "degree", None))

    def _degree_for_mul(self, other):
        return None

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if type(other) is type(self):
                self._same_space(other)
                out: dict = {}
                for e1, c1 in self._coeffs.items():
                    for e2, c2 in other._coeffs.items():
                        e = _add_exp(e1, e2)
                        v = c1 * c2
                        out[e] = out[e] + v if e in out else v
                return self._new(out, self._degree_for_mul(other))
            if not isinstance(self, HomogeneousPoly):
                return NotImplemented
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            return NotImplemented
        return self.scale(1 / _coerce(other))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = self.one_like()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def one_like(self):
        return Polynomial.constant(self.dim, 1)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                return False
            if isinstance(self, HomogeneousPoly) and isinstance(other, HomogeneousPoly):
                if self._coeffs or other._coeffs:
                    return self._coeffs == other._coeffs
                return self.degree == other.degree
            return self._coeffs == other._coeffs
        try:
            c = _coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        if _is_zero(c):
            return not self._coeffs
        zero = (0,) * self.dim
        return set(self._coeffs) == {zero} and self._coeffs[zero] == c

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, self.dim, frozenset(self._coeffs.items())))
        return self._hash

    # calculus

    def diff(self, i: int, times: int = 1):
        """Partial derivative in variable ``i`` (0-based)."""
        if not 0 <= i < self.dim:
            raise IndexError(f"variable index {i} out of range for dim {self.dim}")
        out = {}
        for e, c in self._coeffs.items():
            if e[i] >= times:
                f = math.perm(e[i], times)
                e2 = e[:i] + (e[i] - times,) + e[i + 1:]
                out[e2] = c * f
        return self._new(out, self._degree_after_diff(times))

    def _degree_after_diff(self, times):
        return None

    def diff_multi(self, beta: Sequence[int]):
        """``d^beta`` applied to the polynomial."""
        beta = tuple(beta)
        if len(beta) != self.dim:
            raise DimensionError("multi-index length mismatch")
        out = {}
        for e, c in self._coeffs.items():
            if all(x >= b for x, b in zip(e, beta)):
                f = 1
                for x, b in zip(e, beta):
                    f *= math.perm(x, b)
                out[tuple(x - b for x, b in zip(e, beta))] = c * f
        return self._new(out, self._degree_after_diff(sum(beta)))

    def map_coeffs(self, fn: Callable):
        return self._new({e: fn(c) for e, c in self._coeffs.items()}, getattr(self, "degree", None))

    def evaluate(self, point: Sequence):
        if len(point) != self.dim:
            raise DimensionError("point has wrong length")
        point = [_coerce(p) for p in point]
        total = Fraction(0)
        for e, c in self._coeffs.items():
            m = c
            for p, x in zip(point, e):
                if x:
                    m = m * p**x
            total = total + m
        return total

    __call__ = evaluate

    def substitute_affine(self, matrix, shift=None) -> Polynomial:
        """Return ``p(M x + c)`` as a polynomial in ``x``."""
        d = self.dim
        rows = [[_coerce(v) for v in row] for row in matrix]
        forms = []
        for i in range(d):
            coeffs = {unit_vector(d, j): rows[i][j] for j in range(d)}
            if shift is not None:
                coeffs[(0,) * d] = _coerce(shift[i])
            forms.append(Polynomial(d, coeffs))
        out = Polynomial(d)
        for e, c in self._coeffs.items():
            m = Polynomial.constant(d, c)
            for i, x in enumerate(e):
                if x:
                    m = m * forms[i] ** x
            out = out + m
        return out

    def to_float(self):
        return self.map_coeffs(float)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.dim}, {format_poly(self)})"


class HomogeneousPoly(Polynomial):
    """Homogeneous polynomial of fixed ``degree`` in ``dim`` variables."""

    __slots__ = ("degree",)

    def __init__(self, dim: int, degree: int, coeffs: Mapping | Iterable | None = None):
        if degree < 0:
            raise ValueError(f"negative degree {degree}")
        self.degree = degree
        super().__init__(dim, coeffs)

    def _validate(self) -> None:
        for e in self._coeffs:
            if sum(e) != self.degree:
                raise ValueError(
                    f"term with exponent {list(e)} has degree {sum(e)}, expected {self.degree}"
                )

    @classmethod
    def zero(cls, dim: int, degree: int) -> HomogeneousPoly:
        return cls(dim, degree)

    @classmethod
    def monomial(cls, e: Sequence[int], c=1) -> HomogeneousPoly:
        e = tuple(e)
        return cls(len(e), sum(e), {e: c})

    @classmethod
    def linear_form(cls, coeffs: Sequence) -> HomogeneousPoly:
        d = len(coeffs)
        return cls(d, 1, {unit_vector(d, i): c for i, c in enumerate(coeffs)})

    @classmethod
    def from_vector(cls, d: int, k: int, vec: Sequence) -> HomogeneousPoly:
        return cls(d, k, zip(monomial_basis(d, k), vec))

    def _new(self, coeffs, degree=None):
        return HomogeneousPoly(self.dim, self.degree if degree is None else degree, coeffs)

    def _degree_for_add(self, other):
        if self._coeffs and other._coeffs and other.degree != self.degree:
            raise ValueError(f"cannot add degrees {self.degree} and {other.degree}")
        return self.degree if self._coeffs or not other._coeffs else other.degree

    def _degree_for_mul(self, other):
        return self.degree + other.degree

    def _degree_after_diff(self, times):
        return max(self.degree - times, 0)

    def one_like(self):
        return HomogeneousPoly(self.dim, 0, {(0,) * self.dim: 1})

    def to_vector(self, zero=Fraction(0)) -> list:
        """Coefficients on :func:`monomial_basis` ``(dim, degree)``."""
        return [self._coeffs.get(e, zero) for e in monomial_basis(self.dim, self.degree)]


def format_poly(p: Polynomial, names: Sequence[str] | None = None) -> str:
    if p.is_zero():
        return "0"
    if names is None:
        names = default_names(p.dim)
    parts = []
    for e, c in p.terms():
        mono = "*".join(
            names[i] if x == 1 else f"{names[i]}^{x}" for i, x in enumerate(e) if x
        )
        if not mono:
            parts.append(f"({c})")
        elif c == 1:
            parts.append(mono)
        else:
            parts.append(f"({c})*{mono}")
    return " + ".join(parts)


def default_names(d: int) -> list:
    if d == 2:
        return ["x", "y"]
    if d % 2 == 0:
        n = d // 2
        return [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    return [f"x{i + 1}" for i in range(d)]


def poly_mul(P: HomogeneousPoly, Q: HomogeneousPoly) -> HomogeneousPoly:
    return P * Q


def partial_derivative(P: HomogeneousPoly, i: int) -> HomogeneousPoly:
    """``dP/dx_i`` with a 1-based index ``i``."""
    if not 1 <= i <= P.dim:
        raise IndexError(f"variable index {i} out of range 1..{P.dim}")
    return P.diff(i - 1)


# -- linear maps -----------------------------------------------------------


def canonical_form_matrix(n: int) -> list:
    """Matrix of ``sum e_i ^ f_i`` in the ordering ``(x_1..x_n, y_1..y_n)``."""
    d = 2 * n
    J = [[Fraction(0)] * d for _ in range(d)]
    for i in range(n):
        J[i][n + i] = Fraction(1)
        J[n + i][i] = Fraction(-1)
    return J


@dataclass(frozen=True)
class LinearMap:
    """A ``dim x dim`` matrix, exact (``Fraction``) or float."""

    matrix: tuple

    def __post_init__(self):
        rows = tuple(tuple(_coerce(v) for v in row) for row in self.matrix)
        if any(len(r) != len(rows) for r in rows):
            raise DimensionError("matrix must be square")
        object.__setattr__(self, "matrix", rows)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @classmethod
    def identity(cls, d: int) -> LinearMap:
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)))

    @classmethod
    def from_array(cls, a) -> LinearMap:
        a = np.asarray(a, dtype=float)
        return cls(tuple(tuple(float(v) for v in row) for row in a))

    def is_exact(self) -> bool:
        return all(isinstance(v, Fraction) for row in self.matrix for v in row)

    def to_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.matrix])

    def __matmul__(self, other: LinearMap) -> LinearMap:
        d = self.dim
        return LinearMap(tuple(
            tuple(sum((self.matrix[i][k] * other.matrix[k][j] for k in range(d)), Fraction(0))
                  for j in range(d))
            for i in range(d)
        ))

    def transpose(self) -> LinearMap:
        return LinearMap(tuple(zip(*self.matrix)))

    def inverse(self) -> LinearMap:
        if self.is_exact():
            from .linalg import SingularMatrixError, inverse

            try:
                return LinearMap(tuple(tuple(r) for r in inverse([list(r) for r in self.matrix])))
            except SingularMatrixError:
                raise SingularMapError("singular linear map") from None
        a = self.to_array()
        if abs(np.linalg.det(a)) < 1e-300:
            raise SingularMapError("singular linear map")
        return LinearMap.from_array(np.linalg.inv(a))

    def symplectic_defect(self) -> float:
        """``max |g^T J g - J|`` for the canonical form (float)."""
        if self.dim % 2:
            raise DimensionError("symplectic check needs even dimension")
        J = np.array(canonical_form_matrix(self.dim // 2), dtype=float)
        g = self.to_array()
        return float(np.max(np.abs(g.T @ J @ g - J)))

    def is_symplectic(self) -> bool:
        if self.is_exact():
            J = canonical_form_matrix(self.dim // 2)
            d = self.dim
            g = self.matrix
            for i in range(d):
                for j in range(d):
                    v = sum(g[a][i] * J[a][b] * g[b][j] for a in range(d) for b in range(d))
                    if v != J[i][j]:
                        return False
            return True
        return self.symplectic_defect() <= 1e-10


def _linear_images(h: Sequence[Sequence], d: int) -> list:
    return [HomogeneousPoly(d, 1, {unit_vector(d, j): h[i][j] for j in range(d)}) for i in range(d)]


def linear_substitute(P: HomogeneousPoly, g) -> HomogeneousPoly:
    """Left action ``(g.P)(xi) = P(g^{-1} xi)``.

    ``g`` may be a :class:`LinearMap`, a nested sequence or a numpy array.
    Exact inputs give exact outputs.
    """
    if not isinstance(g, LinearMap):
        g = LinearMap(tuple(tuple(r) for r in (g.tolist() if isinstance(g, np.ndarray) else g)))
    if g.dim != P.dim:
        raise DimensionError(f"map of size {g.dim} acting on polynomials in {P.dim} variables")
    h = g.inverse().matrix
    return substitute_linear(P, h)


def substitute_linear(P: HomogeneousPoly, h) -> HomogeneousPoly:
    """``P(h xi)`` for a matrix ``h`` (no inversion)."""
    d = P.dim
    forms = _linear_images(h, d)
    powers: dict = {}

    def power(i, x):
        key = (i, x)
        if key not in powers:
            powers[key] = forms[i] ** x if x else HomogeneousPoly(d, 0, {(0,) * d: 1})
        return powers[key]

    out = HomogeneousPoly(d, P.degree)
    for e, c in P._coeffs.items():
        m = HomogeneousPoly(d, 0, {(0,) * d: c})
        for i, x in enumerate(e):
            if x:
                m = m * power(i, x)
        out = out + m
    return out


# -- float symmetric-power representation ----------------------------------


@cache
def _mult_table(d: int, k: int) -> np.ndarray:
    """``table[a, j]`` = index in degree ``k`` basis of ``basis_{k-1}[a] * x_j``."""
    prev = monomial_basis(d, k - 1)
    idx = basis_index(d, k)
    table = np.empty((len(prev), d), dtype=np.intp)
    for a, e in enumerate(prev):
        for j in range(d):
            table[a, j] = idx[_add_exp(e, unit_vector(d, j))]
    return table


@cache
def _split_first(d: int, k: int) -> tuple:
    """For each degree-k monomial: (first variable, index of the monomial with it removed)."""
    idx = basis_index(d, k - 1)
    first, rest = [], []
    for e in monomial_basis(d, k):
        i = next(j for j, x in enumerate(e) if x)
        first.append(i)
        rest.append(idx[e[:i] + (e[i] - 1,) + e[i + 1:]])
    return tuple(first), tuple(rest)


def substitution_matrix(h: np.ndarray, k: int) -> np.ndarray:
    """Matrix of ``P -> P(h xi)`` on degree-``k`` coefficient vectors (float).

    Column ``j`` holds the expansion of ``basis[j](h xi)``.
    """
    h = np.asarray(h, dtype=float)
    d = h.shape[0]
    if k == 0:
        return np.ones((1, 1))
    cur = np.ascontiguousarray(h.T)
    for m in range(2, k + 1):
        prev = cur
        table = _mult_table(d, m).ravel()
        first, rest = _split_first(d, m)
        nb = len(first)
        cur = np.zeros((nb, nb))
        for col in range(nb):
            np.add.at(cur[:, col], table, np.outer(prev[:, rest[col]], h[first[col]]).ravel())
    return cur


def act_float(P_vec: np.ndarray, g_inv: np.ndarray, k: int) -> np.ndarray:
    """Coefficient vector of ``P o g^{-1}`` given ``g^{-1}``."""
    return substitution_matrix(g_inv, k) @ P_vec



def evaluate_coefficients(field: HomogeneousPoly, point: Sequence) -> HomogeneousPoly:
    """Freeze a symbol field (coefficients = base polynomials) at a base point."""
    def ev(c):
        return c.evaluate(point) if isinstance(c, Polynomial) else c

    return HomogeneousPoly(field.dim, field.degree, {e: ev(c) for e, c in field.coeffs.items()})


def lift_coefficients(P: HomogeneousPoly, base_dim: int) -> HomogeneousPoly:
    """View a constant symbol as a symbol field over a ``base_dim``-dimensional base."""
    return P.map_coeffs(lambda c: c if isinstance(c, Polynomial) else Polynomial.constant(base_dim, c))
