"""Invariant polynomials of symbols.

A symbol ``P`` of degree ``p`` turns transvectants into linear operators on
``S^q`` (the degree-``q`` polynomials), and traces of their powers are
invariant under the symplectic (resp. orthogonal) linear group:

* ``J_{k,q} = Tr A^k`` with ``A: Q -> [P, Q]_{p/2}``            (p even)
* ``I_{l,k;q} = Tr A^k`` with ``A: Q -> [[P,P]_{2l}, Q]_{p-2l}``  (2l < p)
* ``N_{k,q}``, ``M_{l,k;q}`` -- the same with metric transvectants, where
  the general family uses ``(P,P)_l`` and order ``p - l``.

The module also carries the ``sp(2n)`` basis of Hamiltonian vector fields
(used for orbit dimensions and by the Wagner solver) and the pairing forms
``[.,.]_p`` / ``(.,.)_p`` on ``S^p``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg
from .polyalg import (
    DimensionError,
    HomogeneousPoly,
    monomial_basis,
    unit_vector,
)
from .transvect import metric_transvectant, symplectic_transvectant, transvectant

MODES = ("even", "general", "metric-even", "metric-general")


class InadmissibleError(ValueError):
    """Parity or range violation for a transvectant operator."""


# -- linear vector fields / sp(2n) ------------------------------------------


def apply_linear_field(L: Sequence[Sequence], P: HomogeneousPoly) -> HomogeneousPoly:
    """Apply the derivation ``sum_l (L xi)_l d/dxi_l`` to ``P``.

    Coefficients of ``P`` may live in any ring (e.g. base polynomials).
    """
    d = P.dim
    out = HomogeneousPoly(d, P.degree)
    if P.degree == 0:
        return out
    for l in range(d):
        row = L[l]
        if all(v == 0 for v in row):
            continue
        form = HomogeneousPoly.linear_form(list(row))
        out = out + P.diff(l) * form
    return out


def sp_generators(n: int) -> list:
    """``(label, L)`` for the basis fields ``b+_ij``, ``b-_ij`` (i <= j) and ``c_ij``.

    ``L`` is the matrix of the linear vector field, so the derivation is
    ``sum_l (L xi)_l d/dxi_l``.  Every ``L`` lies in ``sp(2n)`` for the
    canonical form ``[[0, I], [-I, 0]]``.
    """
    d = 2 * n
    gens = []

    def blank():
        return [[Fraction(0)] * d for _ in range(d)]

    for i in range(n):
        for j in range(i, n):
            L = blank()
            # y_i d/dx_j + y_j d/dx_i
            L[j][n + i] += 1
            L[i][n + j] += 1
            gens.append((f"b+_{i + 1}{j + 1}", L))
    for i in range(n):
        for j in range(i, n):
            L = blank()
            # -x_i d/dy_j - x_j d/dy_i
            L[n + j][i] -= 1
            L[n + i][j] -= 1
            gens.append((f"b-_{i + 1}{j + 1}", L))
    for i in range(n):
        for j in range(n):
            L = blank()
            # x_i d/dx_j - y_j d/dy_i
            L[j][i] += 1
            L[n + i][n + j] -= 1
            gens.append((f"c_{i + 1}{j + 1}", L))
    return gens


def _half_dim(P: HomogeneousPoly) -> int:
    if P.dim % 2:
        raise DimensionError(f"symplectic space needs even dimension, got {P.dim}")
    return P.dim // 2


def orbit_tangent_matrix(P: HomogeneousPoly) -> list:
    """Rows = monomials of degree ``deg P``, columns = ``X(P)`` for each sp generator."""
    n = _half_dim(P)
    cols = [apply_linear_field(L, P).to_vector() for _, L in sp_generators(n)]
    return [list(r) for r in zip(*cols)]


def sp_orbit_dimension(P: HomogeneousPoly) -> int:
    """Dimension of the infinitesimal ``sp(2n)`` orbit through ``P``."""
    _half_dim(P)
    if P.is_zero() or P.degree == 0:
        return 0
    M = orbit_tangent_matrix(P)
    if P.is_exact():
        return linalg.rank(M)
    return linalg.numeric_rank(np.array(M, dtype=float))


def sp_dimension(n: int) -> int:
    return n * (2 * n + 1)


def hamiltonian_field(Q2: HomogeneousPoly) -> list:
    """Matrix ``L`` of ``X_Q = sum dQ/dy_i d/dx_i - dQ/dx_i d/dy_i`` (unscaled)."""
    n = _half_dim(Q2)
    if Q2.degree != 2:
        raise ValueError(f"Hamiltonian derivation needs a quadric, got degree {Q2.degree}")
    d = 2 * n
    L = [[Fraction(0)] * d for _ in range(d)]
    for i in range(n):
        gy = Q2.diff(n + i)
        gx = Q2.diff(i)
        for j in range(d):
            e = unit_vector(d, j)
            L[i][j] += gy.coefficient(e)
            L[n + i][j] -= gx.coefficient(e)
    return L


def hamiltonian_matrix(Q2: HomogeneousPoly, q: int) -> list:
    """Matrix of ``X_Q`` acting on ``S^q`` in the monomial basis."""
    L = hamiltonian_field(Q2)
    cols = [apply_linear_field(L, HomogeneousPoly.monomial(e)).to_vector()
            for e in monomial_basis(Q2.dim, q)]
    return [list(r) for r in zip(*cols)]


# -- transvectant operators -------------------------------------------------


@dataclass(frozen=True)
class TransvectantOperatorMatrix:
    """Matrix of a transvectant operator ``S^q -> S^q``.

    Entry ``(i, j)`` is the coefficient of ``basis[i]`` in the image of
    ``basis[j]``.
    """

    q: int
    basis: tuple
    matrix: tuple
    mode: str
    l: int | None = None


def _mode_data(P: HomogeneousPoly, mode: str, q: int, l: int | None):
    """Return ``(kernel polynomial, order, kind)`` for a mode, checking ranges."""
    p = P.degree
    if mode == "even":
        if p % 2:
            raise InadmissibleError(f"even mode needs even degree, got {p}")
        if 2 * q < p:
            raise InadmissibleError(f"even mode needs 2q >= p, got q={q}, p={p}")
        return P, p // 2, "symplectic"
    if mode == "metric-even":
        if p % 2:
            raise InadmissibleError(f"metric-even mode needs even degree, got {p}")
        if 2 * q < p:
            raise InadmissibleError(f"metric-even mode needs 2q >= p, got q={q}, p={p}")
        return P, p // 2, "metric"
    if l is None:
        raise InadmissibleError(f"mode {mode!r} needs l")
    if mode == "general":
        if not 0 <= 2 * l < p:
            raise InadmissibleError(f"general mode needs 0 <= 2l < p, got l={l}, p={p}")
        if q < p - 2 * l:
            raise InadmissibleError(f"general mode needs q >= p - 2l, got q={q}")
        return symplectic_transvectant(P, P, 2 * l), p - 2 * l, "symplectic"
    if mode == "metric-general":
        if not 0 <= l < p:
            raise InadmissibleError(f"metric-general mode needs 0 <= l < p, got l={l}, p={p}")
        if q < p - l:
            raise InadmissibleError(f"metric-general mode needs q >= p - l, got q={q}")
        return metric_transvectant(P, P, l), p - l, "metric"
    raise InadmissibleError(f"unknown mode {mode!r}")


def transvectant_operator_matrix(P: HomogeneousPoly, mode: str, q: int,
                                 l: int | None = None) -> TransvectantOperatorMatrix:
    kernel, order, kind = _mode_data(P, mode, q, l)
    if kind == "symplectic":
        _half_dim(P)
    basis = monomial_basis(P.dim, q)
    cols = []
    for e in basis:
        img = transvectant(kernel, HomogeneousPoly.monomial(e), order, kind)
        if not img.is_zero() and img.degree != q:
            raise AssertionError(f"transvectant image has degree {img.degree}, expected {q}")
        cols.append(img.to_vector() if img.degree == q else [Fraction(0)] * len(basis))
    matrix = tuple(tuple(r) for r in zip(*cols))
    return TransvectantOperatorMatrix(q, tuple(basis), matrix, mode, l)


def _entry_kind(matrix) -> str:
    kind = "exact"
    for row in matrix:
        for v in row:
            if isinstance(v, float):
                kind = "float"
            elif not isinstance(v, (Fraction, int)):
                return "ring"
    return kind


def trace_powers(matrix: Sequence[Sequence], kmax: int) -> list:
    """``[Tr A, Tr A^2, ..., Tr A^kmax]``.

    Exact matrices are scaled to integers and multiplied as Python ints;
    floats go through numpy; anything else (polynomial entries) uses plain
    loops.
    """
    if kmax < 1:
        return []
    kind = _entry_kind(matrix)
    n = len(matrix)
    if kind == "exact":
        den = 1
        for row in matrix:
            for v in row:
                den = math.lcm(den, Fraction(v).denominator)
        B = np.array([[int(Fraction(v) * den) for v in row] for row in matrix], dtype=object)
        out = []
        power = B
        for k in range(1, kmax + 1):
            if k > 1:
                power = power.dot(B)
            out.append(Fraction(int(sum(power[i, i] for i in range(n))), den**k))
        return out
    if kind == "float":
        A = np.array(matrix, dtype=float)
        out = []
        power = A
        for k in range(1, kmax + 1):
            if k > 1:
                power = power @ A
            out.append(float(np.trace(power)))
        return out
    A = [list(r) for r in matrix]
    out = []
    power = A
    for k in range(1, kmax + 1):
        if k > 1:
            power = [[sum((power[i][m] * A[m][j] for m in range(n)), Fraction(0))
                      for j in range(n)] for i in range(n)]
        out.append(sum((power[i][i] for i in range(n)), Fraction(0)))
    return out


# -- signatures -------------------------------------------------------------


@dataclass(frozen=True)
class SignatureConfig:
    """Which invariants go into a signature.

    ``q_values=None`` means ``{ceil(p/2), p}``; ``k_cap`` bounds the matrix
    powers (never above ``dim S^q``).
    """

    kind: str = "symplectic"
    q_values: tuple | None = None
    k_cap: int = 8
    include_orbit_dim: bool = True
    include_pairing: bool = True
    include_hamiltonian: bool = True

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "q_values": None if self.q_values is None else list(self.q_values),
            "k_cap": self.k_cap,
            "include_orbit_dim": self.include_orbit_dim,
            "include_pairing": self.include_pairing,
            "include_hamiltonian": self.include_hamiltonian,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SignatureConfig:
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        if known.get("q_values") is not None:
            known["q_values"] = tuple(int(q) for q in known["q_values"])
        return cls(**known)


@dataclass(frozen=True)
class InvariantLabel:
    family: str  # J, I, N, M, K, pair, TrX, orbit_dim
    k: int | None = None
    q: int | None = None
    l: int | None = None
    p: int | None = None

    def __str__(self) -> str:
        f = self.family
        if f in ("J", "N"):
            return f"{f}_{{{self.k},{self.q}}}"
        if f in ("I", "M"):
            return f"{f}_{{{self.l},{self.k};{self.q}}}"
        if f == "K":
            return f"K_{self.p}"
        if f == "pair":
            return f"[P,P]_{self.p}"
        if f == "TrX":
            return f"Tr(X_P^{self.k})"
        return "orbit_dim"


def parse_label(text: str) -> InvariantLabel:
    import re

    text = text.strip()
    m = re.fullmatch(r"([JN])_\{(\d+),(\d+)\}", text)
    if m:
        return InvariantLabel(m[1], k=int(m[2]), q=int(m[3]))
    m = re.fullmatch(r"([IM])_\{(\d+),(\d+);(\d+)\}", text)
    if m:
        return InvariantLabel(m[1], l=int(m[2]), k=int(m[3]), q=int(m[4]))
    m = re.fullmatch(r"K_(\d+)", text)
    if m:
        return InvariantLabel("K", p=int(m[1]))
    m = re.fullmatch(r"\[P,P\]_(\d+)", text)
    if m:
        return InvariantLabel("pair", p=int(m[1]))
    m = re.fullmatch(r"Tr\(X_P\^(\d+)\)", text)
    if m:
        return InvariantLabel("TrX", k=int(m[1]))
    if text == "orbit_dim":
        return InvariantLabel("orbit_dim")
    raise ValueError(f"unrecognised invariant label {text!r}")


def _default_q_values(p: int) -> tuple:
    return tuple(sorted({max(1, (p + 1) // 2), max(p, 1)}))


def signature_labels(d: int, p: int, config: SignatureConfig = SignatureConfig()) -> list:
    """Deterministic label list for symbols of degree ``p`` in ``d`` variables."""
    qs = config.q_values if config.q_values is not None else _default_q_values(p)
    labels = []

    def kmax(q):
        return min(config.k_cap, math.comb(d + q - 1, q))

    if config.kind == "symplectic":
        if d % 2:
            raise DimensionError("symplectic signatures need even dimension")
        for q in qs:
            if p % 2 == 0 and p > 0 and 2 * q >= p:
                labels += [InvariantLabel("J", k=k, q=q) for k in range(1, kmax(q) + 1)]
        for q in qs:
            lo = math.ceil(max(0, p - q) / 2)
            for l in range(lo, (p - 1) // 2 + 1 if p > 0 else 0):
                labels += [InvariantLabel("I", l=l, k=k, q=q) for k in range(1, kmax(q) + 1)]
        if config.include_pairing and p % 2 == 0:
            labels.append(InvariantLabel("pair", p=p))
        if config.include_hamiltonian and p == 2:
            labels += [InvariantLabel("TrX", k=2), InvariantLabel("TrX", k=4)]
        if config.include_orbit_dim:
            labels.append(InvariantLabel("orbit_dim"))
    elif config.kind == "metric":
        for q in qs:
            if p % 2 == 0 and p > 0 and 2 * q >= p:
                labels += [InvariantLabel("N", k=k, q=q) for k in range(1, kmax(q) + 1)]
        for q in qs:
            for l in range(max(0, p - q), p):
                labels += [InvariantLabel("M", l=l, k=k, q=q) for k in range(1, kmax(q) + 1)]
        if config.include_pairing:
            labels.append(InvariantLabel("K", p=p))
    else:
        raise ValueError(f"unknown signature kind {config.kind!r}")
    return labels


@dataclass(frozen=True)
class InvariantSignature:
    """Ordered invariant values.

    ``scales`` holds, per entry, the magnitude of the quantities the value
    was summed from (``||A||_F^k`` for a trace of ``A^k``).  Float
    comparisons measure rounding against it.
    """

    labels: tuple
    values: tuple
    meta: dict = field(default_factory=dict, compare=False)
    scales: tuple = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.labels)

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.values))

    def __getitem__(self, label: str):
        return self.as_dict()[label]


def _operator_key(lab: InvariantLabel):
    return {
        "J": ("even", lab.q, None),
        "I": ("general", lab.q, lab.l),
        "N": ("metric-even", lab.q, None),
        "M": ("metric-general", lab.q, lab.l),
    }[lab.family]


def _frobenius(matrix) -> float:
    try:
        return float(np.linalg.norm(np.array(matrix, dtype=float)))
    except TypeError:
        return 0.0


def _exact_copy(P: HomogeneousPoly) -> HomogeneousPoly | None:
    """``P`` with its float coefficients read as the dyadic rationals they are."""
    vals = list(P.coeffs.values())
    if not vals or not all(isinstance(c, float) for c in vals) or not all(math.isfinite(c) for c in vals):
        return None
    return HomogeneousPoly(P.dim, P.degree, {e: Fraction(c) for e, c in P.coeffs.items()})


def evaluate_labels(P: HomogeneousPoly, labels: Sequence, with_scales: bool = False):
    """Values of the given invariant labels at ``P`` (grouped by operator).

    Float symbols are evaluated exactly on their binary values and rounded
    once at the end: trace powers of the operator matrices cancel heavily,
    and float evaluation loses up to ten digits on otherwise benign inputs.
    The orbit dimension stays a float rank computation.
    """
    labels = [parse_label(x) if isinstance(x, str) else x for x in labels]
    exact = _exact_copy(P)
    if exact is not None:
        values, scales = evaluate_labels(exact, [lab for lab in labels if lab.family != "orbit_dim"], True)
        it = iter(zip(values, scales))
        out, sc = [], []
        for lab in labels:
            if lab.family == "orbit_dim":
                out.append(sp_orbit_dimension(P))
                sc.append(0.0)
            else:
                v, c = next(it)
                out.append(float(v))
                sc.append(c)
        return (out, sc) if with_scales else out
    need: dict = {}
    for lab in labels:
        if lab.family in ("J", "I", "N", "M"):
            key = _operator_key(lab)
            need[key] = max(need.get(key, 0), lab.k)
    traces = {}
    norms = {}
    for (mode, q, l), kmax in need.items():
        mat = transvectant_operator_matrix(P, mode, q, l).matrix
        traces[(mode, q, l)] = trace_powers(mat, kmax)
        norms[(mode, q, l)] = _frobenius(mat) if with_scales else 0.0
    out = []
    scales = []
    for lab in labels:
        f = lab.family
        scale = 0.0
        if f in ("J", "I", "N", "M"):
            out.append(traces[_operator_key(lab)][lab.k - 1])
            scale = norms[_operator_key(lab)] ** lab.k
        elif f == "pair":
            if lab.p != P.degree:
                raise InadmissibleError(f"{lab} needs a degree-{lab.p} symbol")
            out.append(symplectic_transvectant(P, P, lab.p).coefficient((0,) * P.dim))
        elif f == "K":
            if lab.p != P.degree:
                raise InadmissibleError(f"{lab} needs a degree-{lab.p} symbol")
            out.append(metric_transvectant(P, P, lab.p).coefficient((0,) * P.dim))
        elif f == "TrX":
            if P.degree != 2:
                raise InadmissibleError("Hamiltonian traces need a quadric")
            X = hamiltonian_matrix(P, 1)
            out.append(trace_powers(X, lab.k)[-1])
            scale = _frobenius(X) ** lab.k if with_scales else 0.0
        elif f == "orbit_dim":
            out.append(sp_orbit_dimension(P))
        else:
            raise InadmissibleError(f"unknown family {f}")
        if with_scales and f in ("pair", "K"):
            try:
                scale = abs(float(out[-1]))
            except TypeError:
                scale = 0.0
        scales.append(scale)
    return (out, scales) if with_scales else out


def trace_invariants(P: HomogeneousPoly, labels: Sequence) -> InvariantSignature:
    """Evaluate an explicit, non-empty label set."""
    if not labels:
        raise ValueError("empty label set")
    labels = [parse_label(x) if isinstance(x, str) else x for x in labels]
    values, scales = evaluate_labels(P, labels, with_scales=True)
    return InvariantSignature(tuple(str(x) for x in labels), tuple(values), {}, tuple(scales))


def invariant_signature(P: HomogeneousPoly,
                        config: SignatureConfig = SignatureConfig()) -> InvariantSignature:
    """Default signature: the labels of :func:`signature_labels` evaluated at ``P``."""
    labels = signature_labels(P.dim, P.degree, config)
    values, scales = evaluate_labels(P, labels, with_scales=True)
    return InvariantSignature(tuple(str(x) for x in labels), tuple(values),
                              {"dim": P.dim, "degree": P.degree, "config": config.to_dict()},
                              tuple(scales))


# -- pairing forms ----------------------------------------------------------


def pairing_form(d: int, p: int, kind: str = "symplectic") -> list:
    """Gram matrix of ``[.,.]_p`` (or ``(.,.)_p``) on the degree-``p`` monomials."""
    if p < 1:
        raise ValueError("pairing forms need p >= 1")
    basis = [HomogeneousPoly.monomial(e) for e in monomial_basis(d, p)]
    zero = (0,) * d
    return [[transvectant(a, b, p, kind).coefficient(zero) for b in basis] for a in basis]


def invariant_degree_bound(n: int) -> int:
    """``C(3n-1, n)``, an expected bound on invariant degrees.  Not enforced anywhere."""
    return math.comb(3 * n - 1, n)
