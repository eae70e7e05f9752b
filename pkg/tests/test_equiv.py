import random

import numpy as np
import pytest
from oracles import random_poly

from opinv.equiv import (
    DISTINCT,
    INDISTINGUISHABLE,
    MATCHED,
    SIGNATURE_MISMATCH,
    ConstantTypeEvidence,
    MatchConfig,
    TypeVaries,
    act,
    constant_type_test,
    orbit_match,
    planted_element,
    signature_match,
)
from opinv.invar import invariant_signature, trace_invariants
from opinv.polyalg import HomogeneousPoly, LinearMap, Polynomial, linear_substitute

CUBIC = HomogeneousPoly(2, 3, {(3, 0): 1, (0, 3): 1})


def test_signature_match_examples():
    s = invariant_signature(CUBIC)
    assert signature_match(s, s).status == INDISTINGUISHABLE
    cmp = signature_match(s, invariant_signature(HomogeneousPoly.monomial((3, 0))))
    assert cmp.status == DISTINCT and cmp.label in s.labels
    g = LinearMap(((1, 2), (0, 1)))
    assert signature_match(s, invariant_signature(linear_substitute(CUBIC, g))).status == INDISTINGUISHABLE


def test_signature_label_mismatch():
    a = trace_invariants(HomogeneousPoly.monomial((2, 2)), ["J_{1,2}"])
    b = trace_invariants(HomogeneousPoly.monomial((2, 2)), ["J_{2,2}"])
    with pytest.raises(ValueError):
        signature_match(a, b)


def test_match_identity():
    res = orbit_match(CUBIC, CUBIC)
    assert res.verdict == MATCHED and res.restart == 0
    assert res.residual == 0.0
    assert np.allclose(res.g.to_array(), np.eye(2))


def test_match_signature_mismatch_short_circuits():
    res = orbit_match(CUBIC, HomogeneousPoly.monomial((3, 0)))
    assert res.verdict == SIGNATURE_MISMATCH
    assert res.g is None and res.history == []


def test_planted_small_batch():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        P = random_poly(random.Random(seed), 2, 3, density=1.0)
        g = planted_element(1, rng, 1.0)
        res = orbit_match(P, act(g, P), MatchConfig(seed=seed))
        assert res.matched
        assert res.residual <= 1e-8
        assert res.g.symplectic_defect() <= 1e-10
        assert all(b <= a for a, b in zip(res.history, res.history[1:]))


def test_determinism_and_threads(monkeypatch):
    rng = np.random.default_rng(3)
    P = random_poly(random.Random(3), 2, 3, density=1.0)
    Q = act(planted_element(1, rng, 1.0), P)
    a = orbit_match(P, Q, MatchConfig(seed=7))
    b = orbit_match(P, Q, MatchConfig(seed=7))
    assert (a.verdict, a.residual, a.restart) == (b.verdict, b.residual, b.restart)
    monkeypatch.setenv("OPINV_THREADS", "4")
    c = orbit_match(P, Q, MatchConfig(seed=7))
    assert (c.verdict, c.restart) == (a.verdict, a.restart)
    assert c.residual == a.residual


def test_match_config_validation():
    with pytest.raises(ValueError):
        MatchConfig(tol=0)
    with pytest.raises(ValueError):
        MatchConfig(restarts=0)


def test_constant_type():
    d = 2
    one = Polynomial.constant(d, 1)
    a1 = Polynomial.variable(d, 0)
    const = HomogeneousPoly(2, 3, {(3, 0): one, (0, 3): one})
    grid = [(0, 0), (1, 0), (2, 1)]
    assert isinstance(constant_type_test(const, grid), ConstantTypeEvidence)
    varying = HomogeneousPoly(2, 3, {(3, 0): one, (0, 3): a1})
    res = constant_type_test(varying, [(0, 0), (1, 0)])
    assert isinstance(res, TypeVaries)
    assert res.label in invariant_signature(CUBIC).labels
    assert res.values[0] != res.values[1]


def test_constant_type_frame_family():
    from make_data import frame_symbol

    res = constant_type_test(frame_symbol(), [(0, 0), (1, 2), (-1, 3), (2, -1)])
    assert isinstance(res, ConstantTypeEvidence)


def test_constant_type_empty_grid():
    with pytest.raises(ValueError):
        constant_type_test(CUBIC, [])
