from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qsl2r.errors import DomainError
from qsl2r.modgen import build_groupoid, t_operators
from qsl2r.paramspace import (Algebra, KTypeSet, Lambda, SpectralPoint, classify, closure_graph,
                              constraint_blocks, discrete_q, enumerate_spectrum, fiber_weights, fiber_window,
                              groupoid_char, groupoid_cont, jmap, ktypes, label_ktypes, minimal_ktypes,
                              principal_q, unit_grid)


def test_classify_examples():
    lam, e, z = classify(SpectralPoint.dis(2.0, 1.0, 1, 1, 1))
    assert lam == 2.0 and e == 1 and z == KTypeSet.half(1, 1, 1)
    lam, e, z = classify(SpectralPoint.pri(2.0, 1.0, -1, 1j))
    assert lam == 1j and e == -1 and z == KTypeSet.full(-1)
    s = SpectralPoint.dis(1.0, 0.0, 1, 2, -1)
    lam, e, z = classify(s)
    assert lam == 0 and e == -1
    assert list(fiber_window(s, 9)) == [-9, -7, -5, -3]


def test_lambda_table():
    assert Lambda(SpectralPoint.pri(1.0, 0.5, 1, 2j)) == 4j
    assert Lambda(SpectralPoint.pri(1.0, 0.0, 1, 2j)) == 2j
    assert Lambda(SpectralPoint.dis(1.0, 0.5, 1, 3, 1)) == 3
    assert_allclose(Lambda(SpectralPoint.dis(2.0, 0.5, -1, 2, 1)), -2.0)


def test_point_validation():
    with pytest.raises(DomainError):
        SpectralPoint.dis(1.0, 0.5, -1, 1, 1)
    with pytest.raises(DomainError):
        SpectralPoint.pri(2.0, 1.0, 1, 0.5)
    with pytest.raises(DomainError):
        SpectralPoint.pri(1.0, 1.0, 1, 1.0)
    assert not SpectralPoint.dis(2.0, 1.0, 1, 0, 1).in_S


@given(st.integers(0, 20), st.sampled_from([1, -1]), st.sampled_from([1, -1]), st.integers(5, 40))
def test_constraint_blocks_partition(n, sigma, sign, N):
    for s in (SpectralPoint.dis(2.0, 0.0, sigma, n, sign), SpectralPoint.pri(2.0, 1.0, (-1) ** (n + 1), sigma),
              SpectralPoint.pri(2.0, 0.0, 1, sigma), SpectralPoint.pri(2.0, 1.0, 1, 1j)):
        win = set(fiber_window(s, N).tolist())
        seen = []
        for b in constraint_blocks(s, N):
            seen.extend(k for k in b.window(N) if k in win)
        assert sorted(seen) == sorted(win)


def test_constraint_block_examples():
    blocks = constraint_blocks(SpectralPoint.pri(2.0, 1.0, -1, 1.0))
    assert blocks == [KTypeSet.half(-1, 1, 0), KTypeSet.half(-1, -1, 0)]
    assert constraint_blocks(SpectralPoint.pri(2.0, 1.0, 1, 1j)) == [KTypeSet.full(1)]
    blocks = constraint_blocks(SpectralPoint.dis(2.0, 0.0, 1, 1, 1), 8)
    assert [b.describe() for b in blocks] == [KTypeSet.singleton(k).describe() for k in (2, 4, 6, 8)]


def test_jmap_examples():
    src = SpectralPoint.pri(2.0, 0.0, -1, 1.0)
    J = jmap(SpectralPoint.dis(2.0, 0.0, 1, 0, 1), src, 5)
    sw = list(fiber_window(src, 5))
    assert J[:, sw.index(1)].sum() == 1 and J[:, sw.index(-1)].sum() == 0
    tgt = SpectralPoint.dis(2.0, 0.0, 1, 2, -1)
    J = jmap(tgt, src, 9)
    tw = list(fiber_window(tgt, 9))
    sw9 = list(fiber_window(src, 9))
    assert J[tw.index(-5), sw9.index(-5)] == 1
    P = J.T @ J
    assert_allclose(P @ P, P)
    assert_allclose(np.diag(P), [1.0 if -k > 2 else 0.0 for k in sw9])


def test_jmap_rejects_mismatch():
    with pytest.raises(DomainError):
        jmap(SpectralPoint.dis(2.0, 0.0, 1, 1, 1), SpectralPoint.pri(2.0, 0.0, -1, 1.0), 5)
    with pytest.raises(DomainError):
        jmap(SpectralPoint.dis(2.0, 1.0, 1, 0, 1), SpectralPoint.pri(2.0, 1.0, -1, 1.0), 5)


@pytest.mark.parametrize("sigma", [1, -1])
@pytest.mark.parametrize("n", [0, 1, 2, 5])
@pytest.mark.parametrize("sign", [1, -1])
def test_jmap_intertwines_groupoid_modules(sigma, n, sign):
    N = 20
    e = (-1) ** (n + 1)
    src = SpectralPoint.pri(2.0, 0.0, e, sigma)
    tgt = SpectralPoint.dis(2.0, 0.0, sigma, n, sign)
    J = jmap(tgt, src, N)
    g = build_groupoid(complex(sigma), e, N)
    keep = np.isin(g.window, fiber_window(tgt, N))
    for A in (g.theta,) + tuple(t_operators(g)):
        lhs = J @ A
        rhs = A[np.ix_(keep, keep)] @ J
        assert np.abs(lhs - rhs).max() < 1e-12


def test_enumerate_counts_and_examples():
    q = enumerate_spectrum(Algebra.QReduced, 2.0, 1.0, 721, 2)
    disc = {(x.sigma, x.n, x.sign) for x in q if x.kind == "DiscreteQ"}
    assert disc == {(s, n, g) for s in (1, -1) for n in range(3) for g in (1, -1)}
    assert principal_q(-1, 1.0) not in q and principal_q(1, 1.0) in q
    g = enumerate_spectrum(Algebra.Groupoid, 2.0, 0.0, 721, 2)
    chars = {(x.sigma, x.m) for x in g if x.kind == "GroupoidChar"}
    assert chars == {(s, m) for s in (1, -1) for m in range(-3, 4)}
    assert len(q) == len(g) == 721 + 719 + 12
    assert minimal_ktypes(discrete_q(1, 2, 1)) == frozenset({3})
    assert minimal_ktypes(principal_q(-1, 1j)) == frozenset({-1, 1})


def test_unit_grid_endpoints_exact():
    g = unit_grid(721)
    assert g[0] == 1 and g[-1] == -1 and len(g) == 721
    assert_allclose(np.abs(g), 1.0)


def test_closure_graph_qreduced():
    g = closure_graph(Algebra.QReduced, 2.0, 1.0, 50)
    assert len(g.nodes) == 1644
    assert len(g.isolated()) == 200
    assert not g.predecessors(discrete_q(1, 2, 1))
    grid = unit_grid(721)
    assert g.has_edge(principal_q(-1, grid[1]), discrete_q(1, 0, 1))
    assert g.has_edge(principal_q(-1, grid[-2]), discrete_q(-1, 0, -1))
    sizes = sorted(len(c) for c in g.components())
    assert sizes[-2:] == [721, 723] and sizes.count(1) == 200
    doc = json.loads(g.to_json())
    assert len(doc["nodes"]) == 1644 and len(doc["edges"]) == 6


def test_closure_graph_groupoid():
    g = closure_graph(Algebra.Groupoid, 2.0, 0.0, 50)
    grid = unit_grid(721)
    assert g.has_edge(groupoid_cont(grid[1], -1), groupoid_char(1, 3))
    assert not g.isolated()
    assert len(g.components()) == 2


def test_closure_graph_domain():
    with pytest.raises(DomainError):
        closure_graph(Algebra.QReduced, 1.0, 1.0, 3)
    with pytest.raises(DomainError):
        closure_graph(Algebra.Groupoid, 2.0, 1.0, 3)


def test_fiber_weights_positive():
    for s in (SpectralPoint.pri(0.5, 1.0, 1, 1j), SpectralPoint.dis(2.0, 0.3, -1, 3, -1)):
        assert np.all(fiber_weights(s, 30) > 0)


def test_label_ktypes():
    assert label_ktypes(groupoid_char(-1, 4)).window(10).tolist() == [4]
    assert label_ktypes(discrete_q(1, 1, -1)).window(6).tolist() == [-6, -4, -2]
