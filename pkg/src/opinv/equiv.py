"""Deciding or refuting symplectic equivalence of symbols.

Three tools, in increasing cost:

``signature_match``
    Compare invariant signatures.  A difference is a proof that the symbols
    lie in different orbits; agreement proves nothing.
``orbit_match``
    Search for ``g`` in ``Sp(2n)`` with ``g.P = Q`` by damped least squares
    in the exponential chart ``g = exp(sum t_a M_a)``.  Failure is never a
    proof of non-equivalence.
``constant_type_test``
    Evaluate signatures of a symbol field along a grid of base points.
"""

from __future__ import annotations

import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .invar import (
    InvariantSignature,
    SignatureConfig,
    invariant_signature,
    sp_generators,
)
from .polyalg import (
    DimensionError,
    HomogeneousPoly,
    LinearMap,
    evaluate_coefficients,
    substitution_matrix,
)

DISTINCT = "Distinct"
INDISTINGUISHABLE = "Indistinguishable"

MATCHED = "Matched"
SIGNATURE_MISMATCH = "SignatureMismatch"
NO_MATCH = "NoMatchFound"


@dataclass(frozen=True)
class SignatureComparison:
    status: str
    label: str | None = None
    values: tuple | None = None

    @property
    def distinct(self) -> bool:
        return self.status == DISTINCT


def signature_match(sigA: InvariantSignature, sigB: InvariantSignature,
                    tol: float = 1e-9) -> SignatureComparison:
    """``Distinct`` iff some entry differs by more than ``tol * (1 + magnitude)``.

    For two exact entries the magnitude is ``max(|a|, |b|)``.  When a float
    is involved it also covers the entry scales carried by the signatures,
    so that rounding in identically-vanishing traces is not read as a
    difference.
    """
    if tuple(sigA.labels) != tuple(sigB.labels):
        raise ValueError("signatures have different label sets")
    n = len(sigA.labels)
    sa = sigA.scales or (0.0,) * n
    sb = sigB.scales or (0.0,) * n
    for label, a, b, ca, cb in zip(sigA.labels, sigA.values, sigB.values, sa, sb):
        magnitude = max(abs(float(a)), abs(float(b)))
        if isinstance(a, float) or isinstance(b, float):
            magnitude = max(magnitude, ca, cb)
        if abs(float(a - b)) > tol * (1 + magnitude):
            return SignatureComparison(DISTINCT, label, (a, b))
    return SignatureComparison(INDISTINGUISHABLE)


# -- orbit matching ---------------------------------------------------------


@dataclass(frozen=True)
class MatchConfig:
    restarts: int = 20
    max_iters: int = 200
    damping: float = 1e-3
    tol: float = 1e-8
    seed: int = 0
    init_scale: float = 0.7
    signature_tol: float = 1e-6

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("need at least one restart")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MatchResult:
    verdict: str
    g: LinearMap | None = None
    residual: float | None = None
    label: str | None = None
    values: tuple | None = None
    restart: int | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def matched(self) -> bool:
        return self.verdict == MATCHED


def sp_basis_arrays(n: int) -> np.ndarray:
    return np.array([np.array(L, dtype=float) for _, L in sp_generators(n)])


class _OrbitProblem:
    def __init__(self, P: HomogeneousPoly, Q: HomogeneousPoly):
        self.k = P.degree
        self.basis = sp_basis_arrays(P.dim // 2)
        self.p = np.array([float(c) for c in P.to_vector()])
        self.q = np.array([float(c) for c in Q.to_vector()])

    def element(self, t: np.ndarray) -> np.ndarray:
        return expm(np.tensordot(t, self.basis, axes=1))

    def residual(self, t: np.ndarray) -> np.ndarray:
        ginv = expm(-np.tensordot(t, self.basis, axes=1))
        return substitution_matrix(ginv, self.k) @ self.p - self.q

    def jacobian(self, t: np.ndarray, h: float = 1e-6) -> np.ndarray:
        cols = []
        for a in range(len(t)):
            e = np.zeros_like(t)
            e[a] = h
            cols.append((self.residual(t + e) - self.residual(t - e)) / (2 * h))
        return np.array(cols).T


def _levenberg_marquardt(prob: _OrbitProblem, t0: np.ndarray, cfg: MatchConfig) -> tuple:
    t = t0.copy()
    r = prob.residual(t)
    f = float(np.linalg.norm(r))
    history = [f]
    lam = cfg.damping
    target = cfg.tol * 1e-3
    for _ in range(cfg.max_iters):
        if f <= target:
            break
        J = prob.jacobian(t)
        A = J.T @ J
        g = J.T @ r
        accepted = False
        while lam < 1e12:
            try:
                delta = -np.linalg.solve(A + lam * np.eye(len(t)), g)
            except np.linalg.LinAlgError:
                lam *= 4
                continue
            trial = t + delta
            if np.linalg.norm(trial) > 60:
                lam *= 4
                continue
            r_new = prob.residual(trial)
            f_new = float(np.linalg.norm(r_new))
            if f_new < f:
                small = f - f_new <= 1e-15 * max(f, 1e-300)
                t, r, f = trial, r_new, f_new
                history.append(f)
                lam = max(lam / 3, 1e-12)
                accepted = not small
                break
            lam *= 4
        if not accepted:
            break
    return t, f, history


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("OPINV_THREADS", "1")))
    except ValueError:
        return 1


def orbit_match(P: HomogeneousPoly, Q: HomogeneousPoly, cfg: MatchConfig = MatchConfig(),
                config: SignatureConfig = SignatureConfig()) -> MatchResult:
    """Search for a symplectic ``g`` with ``g.P = Q``.

    Signatures are compared first; a mismatch short-circuits the search.
    The result is the lowest-index restart that reaches ``cfg.tol``, or the
    best residual overall when none does.
    """
    if P.dim != Q.dim:
        raise DimensionError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    if P.degree != Q.degree:
        raise DimensionError(f"degree mismatch: {P.degree} vs {Q.degree}")
    if P.dim % 2:
        raise DimensionError("symplectic matching needs even dimension")
    cmp = signature_match(invariant_signature(P, config), invariant_signature(Q, config),
                          cfg.signature_tol)
    if cmp.distinct:
        return MatchResult(SIGNATURE_MISMATCH, label=cmp.label, values=cmp.values)

    prob = _OrbitProblem(P, Q)
    m = len(prob.basis)
    rng = np.random.default_rng(cfg.seed)
    starts = [np.zeros(m)] + [rng.normal(scale=cfg.init_scale, size=m)
                              for _ in range(cfg.restarts - 1)]

    def run(i):
        t, f, hist = _levenberg_marquardt(prob, starts[i], cfg)
        return i, t, f, hist

    def is_match(t, f):
        if f > cfg.tol:
            return False
        return LinearMap.from_array(prob.element(t)).symplectic_defect() <= 1e-10

    threads = _thread_count()
    results = []
    if threads == 1:
        for i in range(len(starts)):
            res = run(i)
            results.append(res)
            if is_match(res[1], res[2]):
                break
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(len(starts))))

    for i, t, f, hist in sorted(results, key=lambda r: r[0]):
        if is_match(t, f):
            return MatchResult(MATCHED, g=LinearMap.from_array(prob.element(t)), residual=f,
                               restart=i, history=hist)
    i, t, f, hist = min(results, key=lambda r: (r[2], r[0]))
    return MatchResult(NO_MATCH, residual=f, restart=i, history=hist)


def planted_element(n: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """``exp(M)`` for a random ``M`` in ``sp(2n)`` with Frobenius norm ``norm``."""
    basis = sp_basis_arrays(n)
    M = np.tensordot(rng.normal(size=len(basis)), basis, axes=1)
    return expm(M * (norm / np.linalg.norm(M)))


def act(g: np.ndarray, P: HomogeneousPoly) -> HomogeneousPoly:
    """Float action ``P o g^{-1}``."""
    ginv = np.linalg.inv(np.asarray(g, dtype=float))
    vec = substitution_matrix(ginv, P.degree) @ np.array([float(c) for c in P.to_vector()])
    return HomogeneousPoly.from_vector(P.dim, P.degree, [float(v) for v in vec])


# -- constant type ----------------------------------------------------------


@dataclass(frozen=True)
class ConstantTypeEvidence:
    points: tuple
    signature: InvariantSignature


@dataclass(frozen=True)
class TypeVaries:
    points: tuple
    label: str
    values: tuple


def constant_type_test(symbol_field: HomogeneousPoly, grid: Sequence[Sequence],
                       config: SignatureConfig = SignatureConfig(), tol: float = 1e-9):
    """Compare symbol signatures across base points.

    Returns :class:`TypeVaries` with a witness pair when some entry changes
    (this proves the type is not constant), otherwise
    :class:`ConstantTypeEvidence` -- a necessary condition only.
    """
    grid = [tuple(p) for p in grid]
    if not grid:
        raise ValueError("empty grid")
    sigs = []
    for pt in grid:
        try:
            sigma = evaluate_coefficients(symbol_field, pt)
        except Exception as exc:  # evaluation failure is reported with the point
            raise ValueError(f"could not evaluate symbol field at {pt}: {exc}") from exc
        sigs.append(invariant_signature(sigma, config))
    ref = sigs[0]
    for pt, sig in zip(grid[1:], sigs[1:]):
        cmp = signature_match(ref, sig, tol)
        if cmp.distinct:
            return TypeVaries((grid[0], pt), cmp.label, cmp.values)
    return ConstantTypeEvidence(tuple(grid), ref)
