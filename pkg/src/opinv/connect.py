"""Affine connections, quantization and total symbols.

Conventions
-----------
Base coordinates ``x_1..x_d``.  A connection is stored as ``gamma[i][k][j]
= Gamma^k_{ij}``, acting on 1-forms by ``(nabla theta)_{ij} = d_i theta_j -
Gamma^k_{ij} theta_k`` and on vectors by ``d_i v^k + Gamma^k_{ij} v^j``.

Symmetric tensor fields are :class:`HomogeneousPoly` objects whose
coefficients are base :class:`Polynomial` objects.  A contravariant field
(a symbol) is a polynomial in fibre variables ``xi``; a covariant field is a
polynomial in ``eta`` (``eta_j <-> dx_j``), and symmetrization is the
commutative product, so for the flat connection ``(d^s)^k f = sum_{|a|=k}
(k!/a!) d^a f eta^a``.

The pairing of ``xi^a`` with ``eta^b`` is ``a! delta_ab`` (``H`` acting as
the constant-coefficient operator ``H(d/deta)``); with the ``1/k!`` in front
this is what makes ``smbl(Q(H)) = H``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from . import linalg
from .invar import apply_linear_field, sp_generators
from .polyalg import (
    DimensionError,
    HomogeneousPoly,
    Polynomial,
    evaluate_coefficients,
    factorial_multi,
    graded_lex_key,
    unit_vector,
)


class ShapeError(ValueError):
    pass


class NotConstantType(ValueError):
    """``d_i sigma`` is not tangent to the orbit of ``sigma`` somewhere."""

    def __init__(self, message: str, point=None, direction=None):
        super().__init__(message)
        self.point = point
        self.direction = direction


class NonRegular(ValueError):
    """The stabilizer algebra of the symbol is non-trivial; no uniqueness."""

    def __init__(self, message: str, point=None, kernel_dim=None):
        super().__init__(message)
        self.point = point
        self.kernel_dim = kernel_dim


class NonPolynomialSolution(ValueError):
    """The Wagner connection exists locally but is not polynomial; use grid mode."""


class DegenerateSymbol(ValueError):
    pass


# -- coefficient helpers ----------------------------------------------------


def base_symbols(d: int) -> tuple:
    return sympy.symbols(f"x1:{d + 1}")


def _diff(c, i: int, d: int):
    if isinstance(c, Polynomial):
        return c.diff(i)
    if isinstance(c, sympy.Basic):
        return sympy.diff(c, base_symbols(d)[i])
    return Fraction(0)


def to_sympy(p, d: int):
    if isinstance(p, sympy.Basic):
        return p
    if not isinstance(p, Polynomial):
        return sympy.nsimplify(p) if isinstance(p, float) else sympy.Rational(p)
    xs = base_symbols(d)
    return sympy.Add(*[
        sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[x**k for x, k in zip(xs, e)])
        for e, c in p.coeffs.items()
    ])


def from_sympy(expr, d: int) -> Polynomial:
    """Exact conversion of a polynomial sympy expression; raises if not polynomial."""
    xs = base_symbols(d)
    poly = sympy.Poly(sympy.expand(expr), *xs)
    if poly.get_domain() not in (sympy.ZZ, sympy.QQ):
        raise ValueError(f"{expr} is not a polynomial with rational coefficients")
    return Polynomial(d, {e: Fraction(int(c.p), int(c.q)) for e, c in poly.terms()})


def as_field(P: HomogeneousPoly, d: int | None = None) -> HomogeneousPoly:
    """Lift constant coefficients to base polynomials (no-op for fields)."""
    d = P.dim if d is None else d
    return P.map_coeffs(lambda c: c if isinstance(c, (Polynomial, sympy.Basic))
                        else Polynomial.constant(d, c))


def field_diff(sigma: HomogeneousPoly, i: int) -> HomogeneousPoly:
    """Base derivative ``d sigma / dx_i`` of a symbol field."""
    return sigma.map_coeffs(lambda c: _diff(c, i, sigma.dim))


def format_point(p) -> str:
    return "(" + ", ".join(str(v) for v in p) + ")"


# -- data types -------------------------------------------------------------


class DiffOperator:
    """``A = sum_{|a| <= k} a_a(x) d^a`` with polynomial coefficients."""

    __slots__ = ("_coeffs", "dim", "order")

    def __init__(self, dim: int, order: int, coeffs=None):
        self.dim = dim
        self.order = order
        out = {}
        items = coeffs.items() if isinstance(coeffs, dict) else (coeffs or ())
        for a, c in items:
            a = tuple(int(v) for v in a)
            if len(a) != dim:
                raise ShapeError(f"multi-index {a} has wrong length for dim {dim}")
            if sum(a) > order:
                raise ShapeError(f"multi-index {list(a)} exceeds declared order {order}")
            if not isinstance(c, Polynomial):
                c = Polynomial.constant(dim, c)
            if c.dim != dim:
                raise ShapeError("coefficient lives on a base of different dimension")
            out[a] = out[a] + c if a in out else c
        self._coeffs = {a: c for a, c in out.items() if not c.is_zero()}

    @property
    def coeffs(self) -> dict:
        return dict(self._coeffs)

    def coefficient(self, a) -> Polynomial:
        return self._coeffs.get(tuple(a), Polynomial(self.dim))

    def items(self) -> list:
        return sorted(self._coeffs.items(), key=lambda t: graded_lex_key(t[0]))

    def part(self, m: int) -> HomogeneousPoly:
        """Homogeneous order-``m`` part as a symbol field."""
        return HomogeneousPoly(self.dim, m, {a: c for a, c in self._coeffs.items() if sum(a) == m})

    def symbol(self) -> HomogeneousPoly:
        return self.part(self.order)

    def effective_order(self) -> int:
        return max((sum(a) for a in self._coeffs), default=0)

    @classmethod
    def from_parts(cls, parts: Sequence[HomogeneousPoly], dim: int, order: int) -> DiffOperator:
        coeffs: dict = {}
        for P in parts:
            for a, c in P.coeffs.items():
                coeffs[a] = coeffs[a] + c if a in coeffs else c
        return cls(dim, order, coeffs)

    def __add__(self, other: DiffOperator) -> DiffOperator:
        if other.dim != self.dim:
            raise ShapeError("dimension mismatch")
        out = dict(self._coeffs)
        for a, c in other._coeffs.items():
            out[a] = out[a] + c if a in out else c
        return DiffOperator(self.dim, max(self.order, other.order), out)

    def __neg__(self) -> DiffOperator:
        return DiffOperator(self.dim, self.order, {a: -c for a, c in self._coeffs.items()})

    def __sub__(self, other: DiffOperator) -> DiffOperator:
        return self + (-other)

    def __eq__(self, other) -> bool:
        return (isinstance(other, DiffOperator) and other.dim == self.dim
                and other._coeffs == self._coeffs)

    def __hash__(self):
        return hash((self.dim, frozenset(self._coeffs.items())))

    def is_zero(self) -> bool:
        return not self._coeffs

    def apply(self, f: Polynomial) -> Polynomial:
        """``sum_a a_a(x) d^a f``."""
        out = Polynomial(self.dim)
        for a, c in self._coeffs.items():
            df = f.diff_multi(a)
            if not df.is_zero():
                out = out + c * df
        return out

    def __repr__(self) -> str:
        from .polyalg import format_poly

        parts = [f"({format_poly(c, [f'x{i + 1}' for i in range(self.dim)])})*d^{list(a)}"
                 for a, c in self.items()]
        return f"DiffOperator({self.dim}, {self.order}, {' + '.join(parts) or '0'})"


class Connection:
    """Christoffel data ``gamma[i][k][j] = Gamma^k_{ij}``.

    Entries are base polynomials; :func:`levi_civita_from_second_order_symbol`
    may produce sympy expressions when the result is not polynomial.
    """

    __slots__ = ("dim", "gamma")

    def __init__(self, dim: int, gamma=None):
        self.dim = dim
        if gamma is None:
            gamma = [[[Polynomial(dim) for _ in range(dim)] for _ in range(dim)] for _ in range(dim)]
        if len(gamma) != dim or any(len(G) != dim or any(len(r) != dim for r in G) for G in gamma):
            raise ShapeError(f"gamma must have shape ({dim}, {dim}, {dim})")

        def norm(c):
            if isinstance(c, (Polynomial, sympy.Basic)):
                return c
            return Polynomial.constant(dim, c)

        self.gamma = tuple(tuple(tuple(norm(c) for c in row) for row in G) for G in gamma)

    @classmethod
    def flat(cls, d: int) -> Connection:
        return cls(d)

    def christoffel(self, k: int, i: int, j: int):
        return self.gamma[i][k][j]

    def is_polynomial(self) -> bool:
        return all(isinstance(c, Polynomial) for G in self.gamma for r in G for c in r)

    def is_flat(self) -> bool:
        return all(_is_zero_entry(c) for G in self.gamma for r in G for c in r)

    def matrix(self, i: int) -> list:
        return [list(r) for r in self.gamma[i]]

    def evaluate(self, point) -> np.ndarray:
        xs = base_symbols(self.dim)
        out = np.zeros((self.dim,) * 3)
        for i in range(self.dim):
            for k in range(self.dim):
                for j in range(self.dim):
                    c = self.gamma[i][k][j]
                    if isinstance(c, Polynomial):
                        out[i, k, j] = float(c.evaluate(point))
                    else:
                        out[i, k, j] = float(c.subs(dict(zip(xs, point))))
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Connection) and self.dim == other.dim and all(
            _is_zero_entry(_sub(a, b))
            for Ga, Gb in zip(self.gamma, other.gamma)
            for ra, rb in zip(Ga, Gb) for a, b in zip(ra, rb))

    def __repr__(self) -> str:
        return f"Connection(dim={self.dim}, gamma={self.gamma})"


def _is_zero_entry(c) -> bool:
    if isinstance(c, Polynomial):
        return c.is_zero()
    if isinstance(c, sympy.Basic):
        return sympy.simplify(c) == 0
    return c == 0


def _sub(a, b):
    if isinstance(a, sympy.Basic) or isinstance(b, sympy.Basic):
        d = a.dim if isinstance(a, Polynomial) else (b.dim if isinstance(b, Polynomial) else None)
        a = to_sympy(a, d) if isinstance(a, Polynomial) else a
        b = to_sympy(b, d) if isinstance(b, Polynomial) else b
    return a - b


@dataclass(frozen=True)
class TotalSymbol:
    """``[sigma_k, sigma_{k-1}, ..., sigma_0]`` for a given connection."""

    parts: tuple

    @property
    def order(self) -> int:
        return len(self.parts) - 1

    def __getitem__(self, i):
        return self.parts[i]

    def __len__(self):
        return len(self.parts)


# -- symmetrized covariant differential ------------------------------------


def _check_conn(d: int, conn: Connection) -> None:
    if conn.dim != d:
        raise ShapeError(f"connection of dimension {conn.dim} on a {d}-dimensional base")
    if not conn.is_polynomial():
        raise ShapeError("quantization needs polynomial Christoffel data")


def _sym_gamma(conn: Connection) -> list:
    """Per ``k``: list of ``(i, j, exponent, coef)`` for ``sum_{i<=j} c^k_ij eta_i eta_j``."""
    d = conn.dim
    out = []
    for k in range(d):
        terms = []
        for i in range(d):
            for j in range(i, d):
                c = conn.gamma[i][k][j]
                if i != j:
                    c = c + conn.gamma[j][k][i]
                for e, v in c.coeffs.items():
                    terms.append((i, j, e, v))
        out.append(terms)
    return out


def _ds_flat(entries: dict, d: int, gam: list) -> dict:
    """One application of ``d^s`` to a jet expression.

    ``entries`` maps ``(beta, a, e)`` to the coefficient of
    ``x^e eta^a d^beta f``.
    """
    out: dict = {}

    def add(key, v):
        w = out.get(key)
        w = v if w is None else w + v
        if w == 0:
            out.pop(key, None)
        else:
            out[key] = w

    units = [unit_vector(d, i) for i in range(d)]
    for (beta, a, e), c in entries.items():
        for i in range(d):
            u = units[i]
            a_i = tuple(x + y for x, y in zip(a, u))
            if e[i]:
                add((beta, a_i, tuple(x - y for x, y in zip(e, u))), c * e[i])
            add((tuple(x + y for x, y in zip(beta, u)), a_i, e), c)
        for k in range(d):
            if not a[k] or not gam[k]:
                continue
            base = tuple(x - y for x, y in zip(a, units[k]))
            f = c * a[k]
            for i, j, g, v in gam[k]:
                a2 = list(base)
                a2[i] += 1
                a2[j] += 1
                add((beta, tuple(a2), tuple(x + y for x, y in zip(e, g))), -f * v)
    return out


def _to_flat(T: HomogeneousPoly, d: int, beta=None) -> dict:
    beta = (0,) * d if beta is None else beta
    out = {}
    for a, c in T.coeffs.items():
        if isinstance(c, Polynomial):
            for e, v in c.coeffs.items():
                out[(beta, a, e)] = v
        else:
            out[(beta, a, (0,) * d)] = c
    return out


def symmetrized_covariant_derivative(T: HomogeneousPoly, conn: Connection) -> HomogeneousPoly:
    """``d^s_nabla T`` for a covariant symmetric field ``T`` (polynomial in ``eta``)."""
    d = T.dim
    _check_conn(d, conn)
    flat = _ds_flat(_to_flat(as_field(T), d), d, _sym_gamma(conn))
    coeffs: dict = {}
    for (beta, a, e), v in flat.items():
        if any(beta):
            continue  # only the terms without derivatives of the test function
        coeffs.setdefault(a, {})[e] = v
    return HomogeneousPoly(d, T.degree + 1, {a: Polynomial(d, c) for a, c in coeffs.items()})


class Quantizer:
    """Caches the jet expansions ``(d^s)^m f`` for one connection."""

    def __init__(self, conn: Connection):
        if not conn.is_polynomial():
            raise ShapeError("quantization needs polynomial Christoffel data")
        self.conn = conn
        self.d = conn.dim
        self._gam = _sym_gamma(conn)
        zero = (0,) * self.d
        self._powers = [{(zero, zero, zero): Fraction(1)}]
        self._grouped: dict = {}

    def expansion(self, m: int) -> dict:
        while len(self._powers) <= m:
            self._powers.append(_ds_flat(self._powers[-1], self.d, self._gam))
        return self._powers[m]

    def _grouped_expansion(self, m: int) -> dict:
        if m not in self._grouped:
            g: dict = {}
            for (beta, a, e), v in self.expansion(m).items():
                g.setdefault(a, {}).setdefault(beta, {})[e] = v
            self._grouped[m] = {a: {b: Polynomial(self.d, es) for b, es in bs.items()}
                                for a, bs in g.items()}
        return self._grouped[m]

    def __call__(self, H: HomogeneousPoly) -> DiffOperator:
        d = self.d
        if H.dim != d:
            raise ShapeError(f"symbol in {H.dim} fibre variables on a {d}-dimensional base")
        k = H.degree
        grouped = self._grouped_expansion(k)
        kf = math.factorial(k)
        coeffs: dict = {}
        for a, h in H.coeffs.items():
            if a not in grouped:
                continue
            w = Fraction(factorial_multi(a), kf)
            for beta, c in grouped[a].items():
                term = c * h if isinstance(h, Polynomial) else c.scale(h)
                term = term.scale(w)
                coeffs[beta] = coeffs[beta] + term if beta in coeffs else term
        return DiffOperator(d, k, coeffs)


def quantize(H: HomogeneousPoly, conn: Connection, quantizer: Quantizer | None = None) -> DiffOperator:
    """``Q(H)(f) = (1/k!) <H, (d^s)^k f>``; satisfies ``smbl(Q(H)) = H``."""
    _check_conn(H.dim, conn)
    q = quantizer if quantizer is not None and quantizer.conn is conn else Quantizer(conn)
    return q(H)


def total_symbol(A: DiffOperator, conn: Connection) -> TotalSymbol:
    """Peel quantized symbols off ``A``: ``A = sum_i Q(sigma_i)``."""
    _check_conn(A.dim, conn)
    q = Quantizer(conn)
    parts = []
    rest = A
    for m in range(A.order, -1, -1):
        sigma = rest.part(m)
        parts.append(sigma)
        if not sigma.is_zero():
            rest = rest - q(sigma)
        if any(sum(a) > m for a in rest.coeffs):
            raise AssertionError("quantization did not cancel the top-order part")
    if not rest.is_zero():
        raise AssertionError("non-zero remainder after splitting")
    return TotalSymbol(tuple(parts))


def reconstruct(ts: TotalSymbol, conn: Connection, dim: int) -> DiffOperator:
    q = Quantizer(conn)
    out = DiffOperator(dim, ts.order)
    for sigma in ts.parts:
        if not sigma.is_zero():
            out = out + q(sigma)
    return DiffOperator(dim, ts.order, out.coeffs)


# -- covariant derivative of symbols ---------------------------------------


def covariant_derivative_symbol(sigma: HomogeneousPoly, conn: Connection) -> list:
    """``[nabla_1 sigma, ..., nabla_d sigma]`` for a contravariant symbol field."""
    d = sigma.dim
    if conn.dim != d:
        raise ShapeError("dimension mismatch")
    sigma = as_field(sigma)
    out = []
    for i in range(d):
        Lt = [[conn.gamma[i][k][l] for k in range(d)] for l in range(d)]
        out.append(field_diff(sigma, i) + apply_linear_field(Lt, sigma))
    return out


# -- Wagner connection ------------------------------------------------------


def _sp_basis(n: int) -> list:
    return [L for _, L in sp_generators(n)]


def _poly_vector(P: HomogeneousPoly) -> list:
    return [c if isinstance(c, Polynomial) else Polynomial.constant(P.dim, c) for c in P.to_vector()]


def _tangent_columns(sigma: HomogeneousPoly, gens: list) -> list:
    return [_poly_vector(apply_linear_field(L, sigma)) for L in gens]


def _eval_matrix(cols: list, point) -> list:
    return [[c.evaluate(point) if isinstance(c, Polynomial) else c for c in col] for col in cols]


def _homogeneous_part(p: Polynomial, D: int) -> Polynomial:
    return Polynomial(p.dim, {e: c for e, c in p.coeffs.items() if sum(e) == D})


def _candidate_points(d: int, count: int = 40):
    yield (Fraction(0),) * d
    for r in range(1, 3):
        for i in range(d):
            for s in (1, -1):
                p = [Fraction(0)] * d
                p[i] = Fraction(s * r)
                yield tuple(p)
    rng = np.random.default_rng(12345)
    for _ in range(count):
        yield tuple(Fraction(int(v)) for v in rng.integers(-3, 4, size=d))


@dataclass(frozen=True)
class WagnerSolution:
    connection: Connection
    kernel_dim: int
    expansion_point: tuple
    degree: int


@dataclass(frozen=True)
class WagnerGrid:
    points: tuple
    gammas: tuple  # one (d, d, d) array per point, indexed [i][k][j]
    residuals: tuple
    kernel_dims: tuple


def _gamma_from_params(params_per_dir: list, gens: list, d: int) -> list:
    """``Gamma_i = sum_a t_a L_a^T``, returned as ``gamma[i][k][j]``."""
    gamma = []
    for t in params_per_dir:
        G = [[Polynomial(d) for _ in range(d)] for _ in range(d)]
        for ta, L in zip(t, gens):
            if ta.is_zero():
                continue
            for k in range(d):
                for j in range(d):
                    if L[j][k] != 0:
                        G[k][j] = G[k][j] + ta.scale(L[j][k])
        gamma.append(G)
    return gamma


def _pointwise_status(cols: list, rhs: list, point) -> tuple:
    """Exact (rank, consistent) of the Wagner system at one base point."""
    A = [list(r) for r in zip(*_eval_matrix(cols, point))]
    b = [c.evaluate(point) if isinstance(c, Polynomial) else c for c in rhs]
    r = linalg.rank(A)
    r_aug = linalg.rank([row + [bv] for row, bv in zip(A, b)])
    return r, r_aug == r


def wagner_connection(sigma: HomogeneousPoly, points: Sequence | None = None,
                      max_degree: int | None = None, tol: float = 1e-8):
    """Symplectic connection preserving a constant-type symbol field.

    For every base direction ``i`` this solves ``Gamma_i in sp(2n)`` and
    ``d_i sigma + rho(Gamma_i) sigma = 0``, where ``rho`` is the action of
    a fibre-linear map on fibre polynomials.  ``nabla omega = 0`` holds
    because every ``Gamma_i`` is in ``sp(2n)`` in Darboux coordinates.

    Without ``points`` the solve is exact: a Taylor recursion around a
    regular base point, degree by degree, followed by an exact check of the
    identity; a :class:`WagnerSolution` is returned.  With ``points`` each
    point is solved in floating point and a :class:`WagnerGrid` is returned.

    Raises :class:`NotConstantType`, :class:`NonRegular` or
    :class:`NonPolynomialSolution`.
    """
    d = sigma.dim
    if d % 2:
        raise DimensionError("Wagner connections need a symplectic (even-dimensional) base")
    if sigma.degree < 3:
        raise ValueError("Wagner connections need symbols of degree >= 3")
    sigma = as_field(sigma)
    gens = _sp_basis(d // 2)
    m = len(gens)
    cols = _tangent_columns(sigma, gens)
    rhs = [_poly_vector(field_diff(sigma, i).scale(-1)) for i in range(d)]
    if points is not None:
        return _wagner_grid(sigma, cols, rhs, gens, points, tol)

    p0 = None
    for pt in _candidate_points(d):
        A0 = [list(r) for r in zip(*_eval_matrix(cols, pt))]
        if linalg.rank(A0) == m:
            p0 = pt
            break
    if p0 is None:
        origin = (Fraction(0),) * d
        kernel = m - linalg.rank([list(r) for r in zip(*_eval_matrix(cols, origin))])
        raise NonRegular("symbol has a non-trivial stabilizer at every sampled base point",
                         point=origin, kernel_dim=kernel)

    ident = [[int(i == j) for j in range(d)] for i in range(d)]
    shift = lambda p: p.substitute_affine(ident, p0) if isinstance(p, Polynomial) else p
    back = [-v for v in p0]
    cols_s = [[shift(c) for c in col] for col in cols]
    rhs_s = [[shift(c) for c in r] for r in rhs]
    nrows = len(cols_s[0])
    A0 = [[cols_s[a][row].coefficient((0,) * d) for a in range(m)] for row in range(nrows)]
    _, pivot_rows = linalg.rref([list(r) for r in zip(*A0)])
    B_inv = linalg.inverse([A0[r] for r in pivot_rows])

    maxdeg = max((c.total_degree() for col in cols_s for c in col), default=0)
    rhs_deg = max((c.total_degree() for r in rhs_s for c in r), default=0)
    if max_degree is None:
        max_degree = 2 * max(maxdeg, rhs_deg) + 2

    T_parts = {}
    for j in range(maxdeg + 1):
        T_parts[j] = [[_homogeneous_part(cols_s[a][row], j) for a in range(m)] for row in range(nrows)]

    params = []
    final_degree = 0
    for i in range(d):
        t_parts: list = []
        solved = False
        for D in range(max_degree + 1):
            res = []
            for row in range(nrows):
                v = _homogeneous_part(rhs_s[i][row], D)
                for j in range(1, min(D, maxdeg) + 1):
                    tj = t_parts[D - j]
                    for a in range(m):
                        if not tj[a].is_zero():
                            c = T_parts[j][row][a]
                            if not c.is_zero():
                                v = v - c * tj[a]
                res.append(v)
            tD = [sum((res[r].scale(B_inv[a][q]) for q, r in enumerate(pivot_rows)), Polynomial(d))
                  for a in range(m)]
            for row in range(nrows):
                lhs = sum((tD[a].scale(A0[row][a]) for a in range(m) if A0[row][a] != 0), Polynomial(d))
                if lhs != res[row]:
                    witness = _find_inconsistency(cols, rhs[i], d)
                    raise NotConstantType(
                        f"d_{i + 1} sigma is not tangent to the orbit (Taylor degree {D})",
                        point=witness, direction=i)
            t_parts.append(tD)
            if D >= rhs_deg and all(t.is_zero() for t in tD) and _identity_holds(cols_s, rhs_s[i], t_parts):
                solved = True
                break
        if not solved:
            if _identity_holds(cols_s, rhs_s[i], t_parts):
                solved = True
            else:
                raise NonPolynomialSolution(
                    f"no polynomial Christoffel data up to degree {max_degree} in direction {i + 1}")
        total = [sum((tp[a] for tp in t_parts), Polynomial(d)) for a in range(m)]
        final_degree = max(final_degree, max(t.total_degree() for t in total))
        params.append([t.substitute_affine(ident, back) for t in total])

    conn = Connection(d, _gamma_from_params(params, gens, d))
    return WagnerSolution(conn, 0, tuple(p0), final_degree)


def _identity_holds(cols_s, rhs_row, t_parts) -> bool:
    m = len(cols_s)
    d = rhs_row[0].dim if rhs_row and isinstance(rhs_row[0], Polynomial) else cols_s[0][0].dim
    t = [sum((tp[a] for tp in t_parts), Polynomial(d)) for a in range(m)]
    for row in range(len(rhs_row)):
        lhs = Polynomial(d)
        for a in range(m):
            if not t[a].is_zero() and not cols_s[a][row].is_zero():
                lhs = lhs + cols_s[a][row] * t[a]
        if lhs != rhs_row[row]:
            return False
    return True


def _find_inconsistency(cols, rhs_row, d):
    m = len(cols)
    for pt in _candidate_points(d):
        r, ok = _pointwise_status(cols, rhs_row, pt)
        if r == m and not ok:
            return pt
    return None


def _wagner_grid(sigma, cols, rhs, gens, points, tol) -> WagnerGrid:
    d = sigma.dim
    m = len(gens)
    L = np.array([np.array(g, dtype=float) for g in gens])
    pts, gammas, residuals, kernels = [], [], [], []
    for pt in points:
        pt = tuple(pt)
        A = np.array([[float(v) for v in col] for col in _eval_matrix(cols, pt)]).T
        s = np.linalg.svd(A, compute_uv=False)
        rank = int(np.sum(s > 1e-9 * max(s[0], 1e-300))) if s.size else 0
        if rank < m:
            raise NonRegular(f"stabilizer of the symbol is non-trivial at {format_point(pt)}", point=pt,
                             kernel_dim=m - rank)
        G = np.zeros((d, d, d))
        worst = 0.0
        for i in range(d):
            b = np.array([float(c.evaluate(pt)) if isinstance(c, Polynomial) else float(c) for c in rhs[i]])
            t, *_ = np.linalg.lstsq(A, b, rcond=None)
            r = float(np.linalg.norm(A @ t - b))
            if r > tol * (1 + np.linalg.norm(b)):
                raise NotConstantType(f"d_{i + 1} sigma is not tangent to the orbit at {format_point(pt)}",
                                      point=pt, direction=i)
            worst = max(worst, r)
            G[i] = np.tensordot(t, L, axes=1).T
        pts.append(pt)
        gammas.append(G)
        residuals.append(worst)
        kernels.append(0)
    return WagnerGrid(tuple(pts), tuple(gammas), tuple(residuals), tuple(kernels))


def grid_parallel_residual(sigma: HomogeneousPoly, grid: WagnerGrid) -> float:
    """Max over grid points of ``|nabla_i sigma|`` using the pointwise Christoffels."""
    sigma = as_field(sigma)
    d = sigma.dim
    worst = 0.0
    for pt, G in zip(grid.points, grid.gammas):
        s0 = evaluate_coefficients(sigma, pt).to_float()
        for i in range(d):
            ds = evaluate_coefficients(field_diff(sigma, i), pt).to_float()
            Lt = G[i].T.tolist()
            v = ds + apply_linear_field(Lt, s0)
            worst = max(worst, max((abs(c) for c in v.coeffs.values()), default=0.0))
    return worst


# -- torsion and curvature --------------------------------------------------


def _mul(a, b, d):
    if isinstance(a, sympy.Basic) or isinstance(b, sympy.Basic):
        return to_sympy(a, d) * to_sympy(b, d)
    return a * b


def _add(a, b, d):
    if isinstance(a, sympy.Basic) or isinstance(b, sympy.Basic):
        return to_sympy(a, d) + to_sympy(b, d)
    return a + b


def torsion_curvature(conn: Connection) -> tuple:
    """``(T, R)`` with ``T[k][i][j] = Gamma^k_ij - Gamma^k_ji`` and
    ``R[i][j] = d_i G_j - d_j G_i + [G_i, G_j]``, where ``G_i[l][k] = Gamma^l_{ik}``.
    """
    d = conn.dim
    g = conn.gamma
    T = [[[_sub(g[i][k][j], g[j][k][i]) for j in range(d)] for i in range(d)] for k in range(d)]
    R = []
    for i in range(d):
        row = []
        for j in range(d):
            M = []
            for l in range(d):
                r = []
                for k in range(d):
                    v = _sub(_diff(g[j][l][k], i, d), _diff(g[i][l][k], j, d))
                    for s in range(d):
                        v = _add(v, _sub(_mul(g[i][l][s], g[j][s][k], d),
                                         _mul(g[j][l][s], g[i][s][k], d)), d)
                    if isinstance(v, sympy.Basic):
                        v = sympy.simplify(v)
                    r.append(v)
                M.append(r)
            row.append(M)
        R.append(row)
    return T, R


def is_zero_tensor(t) -> bool:
    if isinstance(t, (list, tuple)):
        return all(is_zero_tensor(x) for x in t)
    return _is_zero_entry(t)


# -- Levi-Civita ------------------------------------------------------------


def _inverse_metric_matrix(sigma2, d: int) -> sympy.Matrix:
    if isinstance(sigma2, sympy.MatrixBase):
        return sympy.Matrix(sigma2)
    if not isinstance(sigma2, HomogeneousPoly) or sigma2.degree != 2:
        raise ShapeError("expected a fibre-quadratic symbol or a symmetric matrix")
    M = sympy.zeros(d, d)
    for e, c in sigma2.coeffs.items():
        idx = [i for i, x in enumerate(e) for _ in range(x)]
        i, j = idx
        v = to_sympy(c, d)
        if i == j:
            M[i, i] += v
        else:
            M[i, j] += v / 2
            M[j, i] += v / 2
    return M


def levi_civita_from_second_order_symbol(sigma2, dim: int | None = None) -> Connection:
    """Christoffel symbols of the metric whose inverse is the symbol ``sigma2``.

    ``sigma2`` is a fibre-quadratic symbol field (``HomogeneousPoly``) or a
    sympy matrix of contravariant components in the symbols ``x1..xd``.
    Entries come back as polynomials when possible, sympy expressions
    otherwise.
    """
    d = dim if dim is not None else (sigma2.dim if isinstance(sigma2, HomogeneousPoly) else sigma2.shape[0])
    ginv = _inverse_metric_matrix(sigma2, d)
    if ginv.shape != (d, d):
        raise ShapeError("symbol matrix has the wrong shape")
    det = sympy.simplify(ginv.det())
    if det == 0:
        raise DegenerateSymbol("second-order symbol is degenerate")
    xs = base_symbols(d)
    g = sympy.simplify(ginv.inv())
    gamma = []
    for i in range(d):
        G = []
        for k in range(d):
            row = []
            for j in range(d):
                v = sympy.Rational(1, 2) * sum(
                    ginv[k, l] * (sympy.diff(g[j, l], xs[i]) + sympy.diff(g[i, l], xs[j])
                                  - sympy.diff(g[i, j], xs[l]))
                    for l in range(d))
                v = sympy.simplify(v)
                try:
                    row.append(from_sympy(v, d))
                except (ValueError, sympy.PolynomialError, sympy.GeneratorsNeeded):
                    row.append(v)
            G.append(row)
        gamma.append(G)
    return Connection(d, gamma)


def covariant_derivative_metric(ginv: sympy.Matrix, conn: Connection) -> list:
    """``nabla_i g^{jk}`` as sympy matrices (simplified)."""
    d = conn.dim
    xs = base_symbols(d)
    out = []
    for i in range(d):
        M = sympy.zeros(d, d)
        for j in range(d):
            for k in range(d):
                v = sympy.diff(ginv[j, k], xs[i])
                for l in range(d):
                    v += to_sympy(conn.gamma[i][j][l], d) * ginv[l, k]
                    v += to_sympy(conn.gamma[i][k][l], d) * ginv[j, l]
                M[j, k] = sympy.simplify(v)
        out.append(M)
    return out
