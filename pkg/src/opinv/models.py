"""Model surfaces of operators and their comparison.

A chart is a list of ``n`` scalar invariant fields ``I_1..I_n`` on the base
(``n`` = base dimension).  The coefficient invariants are the coefficients
of the operator written in the coordinates ``y = I(x)``:

    I_alpha(p) = (1/alpha!) A[(I - I(p))^alpha](p),

expanded binomially into an exact polynomial field.  For the identity chart
this returns the coefficients ``a_alpha`` themselves.  The model surface is
the image of ``x -> (I(x), (I_alpha(x))_alpha)``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from itertools import product

import numpy as np
from sympy.polys.domains import QQ
from sympy.polys.rings import ring

from . import linalg
from .connect import DiffOperator
from .invar import InadmissibleError, evaluate_labels, parse_label
from .polyalg import (
    DimensionError,
    HomogeneousPoly,
    Polynomial,
    canonical_form_matrix,
    compositions,
    factorial_multi,
    graded_lex_key,
    substitute_linear,
)

COINCIDE = "ModelsCoincide"
MODELS_DISTINCT = "ModelsDistinct"
INCONCLUSIVE = "Inconclusive"


class NotAdjusted(ValueError):
    pass


class ChartMismatch(ValueError):
    pass


@dataclass(frozen=True)
class InvariantField:
    label: str
    value: Polynomial

    @property
    def dim(self) -> int:
        return self.value.dim

    def __call__(self, point):
        return self.value.evaluate(point)


def identity_chart(d: int) -> list:
    return [InvariantField(f"x{i + 1}", Polynomial.variable(d, i)) for i in range(d)]


def symbol_invariant_field(A: DiffOperator, label: str) -> InvariantField:
    """Trace invariant ``label`` of the principal symbol, as a base polynomial."""
    sigma = A.symbol()
    if sigma.is_zero():
        raise InadmissibleError("operator has a vanishing principal symbol")
    lab = parse_label(label) if isinstance(label, str) else label
    (value,) = evaluate_labels(sigma, [lab])
    if not isinstance(value, Polynomial):
        value = Polynomial.constant(A.dim, value)
    return InvariantField(str(lab), value)


def apply_operator(A: DiffOperator, f: Polynomial) -> Polynomial:
    """``sum_alpha a_alpha d^alpha f``."""
    if f.dim != A.dim:
        raise DimensionError("function and operator live on different bases")
    return A.apply(f)


def _det(M: list) -> Polynomial:
    n = len(M)
    if n == 1:
        return M[0][0]
    out = Polynomial(M[0][0].dim)
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det(minor)
        out = out + term if j % 2 == 0 else out - term
    return out


def jacobian_matrix(chart: Sequence[InvariantField]) -> list:
    d = chart[0].dim
    return [[f.value.diff(j) for j in range(d)] for f in chart]


def jacobian_determinant(chart: Sequence[InvariantField]) -> Polynomial:
    return _det(jacobian_matrix(chart))


def _check_chart(A: DiffOperator, chart: Sequence[InvariantField]) -> Polynomial:
    if len(chart) != A.dim or any(f.dim != A.dim for f in chart):
        raise NotAdjusted(f"need {A.dim} chart functions on a {A.dim}-dimensional base")
    det = jacobian_determinant(chart)
    if det.is_zero():
        raise NotAdjusted("chart Jacobian vanishes identically")
    return det


def coefficient_indices(d: int, order: int) -> list:
    return [a for k in range(order + 1) for a in compositions(k, d)]


@cache
def _qq_ring(d: int):
    R, *gens = ring(",".join(f"x{i + 1}" for i in range(d)), QQ)
    return R, tuple(gens)


def _to_ring(R, p: Polynomial):
    return R({e: QQ(c.numerator, c.denominator) for e, c in p.coeffs.items()})


def _from_ring(d: int, q) -> Polynomial:
    return Polynomial(d, {e: Fraction(int(c.numerator), int(c.denominator)) for e, c in q.items()})


class _Backend:
    """Exact polynomial arithmetic for the coefficient expansion.

    Rational data goes through sympy's sparse ``QQ`` rings (much faster than
    ``Fraction``); anything else falls back to :class:`Polynomial`.
    """

    def __init__(self, A: DiffOperator, chart: Sequence[InvariantField]):
        d = A.dim
        self.d = d
        polys = [f.value for f in chart] + [a for _, a in A.items()]
        self.fast = all(p.is_exact() for p in polys)
        if self.fast:
            self.R, gens = _qq_ring(d)
            self.chart = [_to_ring(self.R, f.value) for f in chart]
            self.ops = [(g, _to_ring(self.R, a)) for g, a in A.items()]
            self.gens = gens
            self.one = self.R.one
        else:
            self.A = A
            self.chart = [f.value for f in chart]
            self.one = Polynomial.constant(d, 1)

    def apply(self, f):
        if not self.fast:
            return self.A.apply(f)
        out = self.R.zero
        for g, a in self.ops:
            h = f
            for i, m in enumerate(g):
                for _ in range(m):
                    h = h.diff(self.gens[i])
                if not h:
                    break
            if h:
                out += a * h
        return out

    def scale(self, f, c: Fraction):
        return f * QQ(c.numerator, c.denominator) if self.fast else f.scale(c)

    def result(self, f) -> Polynomial:
        return _from_ring(self.d, f) if self.fast else f


def model_coefficients(A: DiffOperator, chart: Sequence[InvariantField]) -> dict:
    """``alpha -> I_alpha`` as exact base polynomials."""
    _check_chart(A, chart)
    d = A.dim
    B = _Backend(A, chart)
    powers = [[B.one] for _ in range(d)]
    for i in range(d):
        for _ in range(A.order):
            powers[i].append(powers[i][-1] * B.chart[i])
    applied: dict = {}

    def image(beta):
        if beta not in applied:
            f = B.one
            for i, b in enumerate(beta):
                if b:
                    f = f * powers[i][b]
            applied[beta] = B.apply(f)
        return applied[beta]

    out = {}
    for alpha in coefficient_indices(d, A.order):
        acc = None
        for beta in product(*[range(a + 1) for a in alpha]):
            term = image(beta)
            if not term:
                continue
            c = math.prod(math.comb(a, b) for a, b in zip(alpha, beta))
            sign = (-1) ** sum(a - b for a, b in zip(alpha, beta))
            for i in range(d):
                if alpha[i] - beta[i]:
                    term = term * powers[i][alpha[i] - beta[i]]
            term = B.scale(term, Fraction(sign * c))
            acc = term if acc is None else acc + term
        if acc is None:
            out[alpha] = Polynomial(d)
        else:
            out[alpha] = B.result(B.scale(acc, Fraction(1, factorial_multi(alpha))))
    return out


def _evaluator(p: Polynomial):
    """Exact evaluation at rational points, falling back to ``evaluate``."""
    if not p.is_exact():
        return p.evaluate
    R, _ = _qq_ring(p.dim)
    q = _to_ring(R, p)

    def ev(x):
        if not all(isinstance(v, Fraction) for v in x):
            return p.evaluate(x)
        v = q.evaluate([(g, QQ(c.numerator, c.denominator)) for g, c in zip(R.gens, x)]) if q else 0
        return Fraction(int(v.numerator), int(v.denominator)) if v else Fraction(0)

    return ev


@dataclass(frozen=True)
class ModelSurface:
    """Sampled image of ``x -> (I(x), I_alpha(x))``, sorted by ``y``.

    ``samples`` holds ``(x, y, Y)`` triples; the exact chart and coefficient
    fields are kept so that comparisons can evaluate anywhere.
    """

    n: int
    order: int
    labels: tuple
    alphas: tuple
    samples: tuple
    chart: tuple
    coefficients: tuple  # polynomials aligned with ``alphas``

    def ys(self) -> np.ndarray:
        return np.array([[float(v) for v in s[1]] for s in self.samples])


def _exact_point(p):
    out = []
    for v in p:
        if isinstance(v, (int, Fraction, np.integer)):
            out.append(Fraction(int(v)) if not isinstance(v, Fraction) else v)
        else:
            out.append(float(v))
    return tuple(out)


def model_surface(A: DiffOperator, chart: Sequence[InvariantField], grid: Sequence) -> ModelSurface:
    grid = [_exact_point(p) for p in grid]
    if not grid:
        raise ValueError("empty grid")
    det = _check_chart(A, chart)
    coeffs = model_coefficients(A, chart)
    alphas = tuple(coeffs)
    chart_ev = [_evaluator(f.value) for f in chart]
    coeff_ev = [_evaluator(coeffs[a]) for a in alphas]
    samples = []
    for x in grid:
        if len(x) != A.dim:
            raise DimensionError(f"grid point {x} has wrong dimension")
        if det.evaluate(x) == 0:
            raise NotAdjusted(f"chart Jacobian vanishes at {x}")
        y = tuple(ev(x) for ev in chart_ev)
        Y = tuple(ev(x) for ev in coeff_ev)
        samples.append((x, y, Y))
    samples.sort(key=lambda s: (tuple(float(v) for v in s[1]), tuple(float(v) for v in s[0])))
    for s, t in zip(samples, samples[1:]):
        if s[1] == t[1]:
            raise NotAdjusted(f"chart takes the same value at {s[0]} and {t[0]}")
    return ModelSurface(A.dim, A.order, tuple(f.label for f in chart), alphas, tuple(samples),
                        tuple(f.value for f in chart), tuple(coeffs[a] for a in alphas))


# -- comparison -------------------------------------------------------------


class _Compiled:
    """Fast float evaluation of a polynomial and its gradient."""

    def __init__(self, p: Polynomial):
        items = p.terms()
        self.exps = np.array([e for e, _ in items], dtype=float).reshape(len(items), p.dim)
        self.coefs = np.array([float(c) for _, c in items])

    def __call__(self, x: np.ndarray) -> float:
        if not len(self.coefs):
            return 0.0
        return float(self.coefs @ np.prod(np.power(x[None, :], self.exps), axis=1))


class _Map:
    def __init__(self, polys: Sequence[Polynomial]):
        self.f = [_Compiled(p) for p in polys]
        d = polys[0].dim
        self.jac = [[_Compiled(p.diff(j)) for j in range(d)] for p in polys]

    def __call__(self, x):
        return np.array([f(x) for f in self.f])

    def jacobian(self, x):
        return np.array([[g(x) for g in row] for row in self.jac])


def _newton(F: _Map, target: np.ndarray, x0: np.ndarray, iters: int = 60):
    x = np.array(x0, dtype=float)
    scale = 1.0 + float(np.max(np.abs(target)))
    for _ in range(iters):
        r = F(x) - target
        if float(np.max(np.abs(r))) <= 1e-13 * scale:
            return x
        try:
            step = np.linalg.solve(F.jacobian(x), r)
        except np.linalg.LinAlgError:
            return None
        x = x - step
        if not np.all(np.isfinite(x)):
            return None
    r = F(x) - target
    return x if float(np.max(np.abs(r))) <= 1e-10 * scale else None


@dataclass
class EquivalenceVerdict:
    status: str
    witness: dict | None = None
    psi: list = field(default_factory=list)
    omega_residual: float | None = None
    model_deviation: float | None = None
    matched: int = 0
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "witness": self.witness,
            "psi": [{"x": list(a), "psi_x": list(b)} for a, b in self.psi],
            "omega_residual": self.omega_residual,
            "model_deviation": self.model_deviation,
            "matched": self.matched,
            "reason": self.reason,
        }


def _grid_spacing(S: ModelSurface) -> float:
    xs = np.array([[float(v) for v in s[0]] for s in S.samples])
    if len(xs) < 2:
        return 1.0
    dist = np.linalg.norm(xs[:, None, :] - xs[None, :, :], axis=-1)
    np.fill_diagonal(dist, np.inf)
    return float(np.median(dist.min(axis=1)))


def _one_way(S: ModelSurface, T: ModelSurface, tol: float) -> tuple:
    """Match every sample of ``S`` into ``T``; return (witness, pairs, deviation)."""
    IT = _Map(T.chart)
    YT = [_Compiled(p) for p in T.coefficients]
    ysT = T.ys()
    xsT = np.array([[float(v) for v in s[0]] for s in T.samples])
    margin = 0.5 * _grid_spacing(T) + 1e-9
    lo, hi = xsT.min(axis=0) - margin, xsT.max(axis=0) + margin
    pairs = []
    deviation = 0.0
    for x, y, Y in S.samples:
        yv = np.array([float(v) for v in y])
        nearest = int(np.argmin(np.linalg.norm(ysT - yv, axis=1)))
        z = _newton(IT, yv, xsT[nearest])
        if z is None or np.any(z < lo) or np.any(z > hi):
            continue  # outside the sampled region of T
        pairs.append((np.array([float(v) for v in x]), z))
        for alpha, a, g in zip(S.alphas, Y, YT):
            b = g(z)
            a = float(a)
            dev = abs(a - b)
            deviation = max(deviation, dev / (1 + max(abs(a), abs(b))))
            if dev > tol * (1 + max(abs(a), abs(b))):
                return ({"kind": "model", "y": [float(v) for v in y], "alpha": list(alpha),
                         "values": [a, b]}, pairs, deviation)
    return None, pairs, deviation


def _omega_residual(S: ModelSurface, T: ModelSurface, pairs: list) -> tuple:
    IS = _Map(S.chart)
    IT = _Map(T.chart)
    n = S.n
    J = np.array(canonical_form_matrix(n // 2), dtype=float)
    h = 1e-4 * min(1.0, _grid_spacing(S))
    worst, where = 0.0, None
    for x, z in pairs:
        D = np.zeros((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            zp = _newton(IT, IS(x + e), z)
            zm = _newton(IT, IS(x - e), z)
            if zp is None or zm is None:
                return float("inf"), x
            D[:, j] = (zp - zm) / (2 * h)
        r = float(np.max(np.abs(D.T @ J @ D - J)))
        if r > worst:
            worst, where = r, x
    return worst, where


def model_compare(SA: ModelSurface, SB: ModelSurface, tol: float = 1e-6) -> EquivalenceVerdict:
    """Compare two model surfaces and check that ``psi = I_B^{-1} o I_A`` is symplectic.

    Every sample of each surface is located on the other one by Newton's
    method on the exact chart (started from the nearest sample in ``y``)
    and kept only if the solution lies in the other surface's sampled
    region; the coefficient invariants are compared there.  When the models agree,
    the Jacobian of ``psi`` is estimated by central differences and
    ``psi^* omega = omega`` is tested.
    """
    if SA.labels != SB.labels or SA.n != SB.n or SA.alphas != SB.alphas:
        raise ChartMismatch("surfaces use different charts, dimensions or orders")
    wit, pairs_ab, dev_ab = _one_way(SA, SB, tol)
    if wit is not None:
        return EquivalenceVerdict(MODELS_DISTINCT, witness=wit, model_deviation=dev_ab,
                                  matched=len(pairs_ab))
    wit, pairs_ba, dev_ba = _one_way(SB, SA, tol)
    if wit is not None:
        return EquivalenceVerdict(MODELS_DISTINCT, witness=wit, model_deviation=dev_ba,
                                  matched=len(pairs_ba))
    deviation = max(dev_ab, dev_ba)
    if not pairs_ab or not pairs_ba:
        return EquivalenceVerdict(INCONCLUSIVE, model_deviation=deviation,
                                  reason="no overlap between the sampled invariant ranges")
    if SA.n % 2:
        return EquivalenceVerdict(INCONCLUSIVE, model_deviation=deviation, matched=len(pairs_ab),
                                  reason="the Lie-condition check needs an even-dimensional base")
    r_ab, at_ab = _omega_residual(SA, SB, pairs_ab)
    r_ba, at_ba = _omega_residual(SB, SA, pairs_ba)
    residual = max(r_ab, r_ba)
    psi = [(tuple(float(v) for v in x), tuple(float(v) for v in z)) for x, z in pairs_ab]
    if residual > tol:
        at = at_ab if r_ab >= r_ba else at_ba
        return EquivalenceVerdict(
            MODELS_DISTINCT,
            witness={"kind": "lie", "x": [float(v) for v in at], "omega_residual": residual},
            psi=psi, omega_residual=residual, model_deviation=deviation, matched=len(pairs_ab),
            reason="models coincide but psi does not preserve the symplectic form")
    return EquivalenceVerdict(COINCIDE, psi=psi, omega_residual=residual,
                              model_deviation=deviation, matched=len(pairs_ab))


# -- affine transport -------------------------------------------------------


def _affine_inverse(G, c) -> tuple:
    Ginv = linalg.inverse([[Fraction(v) for v in row] for row in G])
    shift = [-sum((Ginv[i][j] * Fraction(c[j]) for j in range(len(c))), Fraction(0))
             for i in range(len(c))]
    return Ginv, shift


def transport_function(f: Polynomial, G, c) -> Polynomial:
    """``f o phi^{-1}`` for ``phi(x) = G x + c``."""
    Ginv, shift = _affine_inverse(G, c)
    return f.substitute_affine(Ginv, shift)


def transport_operator(A: DiffOperator, G, c=None) -> DiffOperator:
    """The operator ``A`` written in the coordinates ``x' = G x + c`` (exact ``G``, ``c``)."""
    d = A.dim
    c = [0] * d if c is None else list(c)
    Ginv, shift = _affine_inverse(G, c)
    Gt = [[Fraction(G[j][i]) for j in range(d)] for i in range(d)]
    out: dict = {}
    for alpha, a in A.items():
        coef = a.substitute_affine(Ginv, shift)
        sym = substitute_linear(HomogeneousPoly.monomial(alpha), Gt)
        for beta, v in sym.coeffs.items():
            term = coef.scale(v)
            out[beta] = out[beta] + term if beta in out else term
    return DiffOperator(d, A.order, out)


def sorted_alphas(d: int, order: int) -> list:
    return sorted(coefficient_indices(d, order), key=graded_lex_key)
