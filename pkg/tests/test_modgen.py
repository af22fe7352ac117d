from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qsl2r import modgen
from qsl2r.errors import ConditionError, DomainError, InvarianceError
from qsl2r.modgen import (Family, TruncatedModule, build_classical_discrete, build_classical_principal,
                          build_discrete_q, build_groupoid, build_motion, build_principal_q, discrete_window,
                          leakage, parity_window, realize_xztheta_from_t, t_operators, weights_discrete,
                          weights_discrete_recursion, weights_principal)
from qsl2r.scalars import DeformationPoint, qint

P2 = DeformationPoint(2.0, 1.0)


def all_builders():
    return [
        build_principal_q(P2, 1, np.exp(1j * np.pi / 3), 20),
        build_principal_q(DeformationPoint(0.5, 1.0), -1, 1j, 21),
        build_discrete_q(P2, 1, 2, -1, 20),
        build_discrete_q(DeformationPoint(0.5, 1.0), -1, 1, 1, 20),
        build_classical_principal(0.7j, 1, 20),
        build_classical_discrete(1, 1, 20),
        build_motion(1j, -1, 21),
        build_groupoid(np.exp(0.4j), 1, 20),
    ]


def test_weights_principal_values():
    w = weights_principal(2.0, 1, 10)
    assert w[0] == 1.0
    assert_allclose(w[2], 2 / (4 + 0.25), rtol=1e-15)
    w = weights_principal(2.0, -1, 10)
    assert_allclose([w[1], w[-1]], [0.8, 0.8], rtol=1e-15)


@given(st.floats(0.2, 5.0), st.sampled_from([1, -1]))
def test_weights_principal_symmetric_positive(qt, e):
    w = weights_principal(qt, e, 15)
    assert all(v > 0 for v in w.values())
    for k, v in w.items():
        assert_allclose(w[-k], v, rtol=1e-15)


@pytest.mark.parametrize("qt", [0.5, 1.0, 2.0, 1.3])
@pytest.mark.parametrize("n", [0, 1, 4])
def test_weights_discrete_lowest_ktype(qt, n):
    w = weights_discrete(qt, n, 1, 30)
    assert_allclose(w[n + 1], 2 / (qt ** (n + 1) + qt ** -(n + 1)), rtol=1e-15)


def test_weights_discrete_frozen_q1_value():
    # recursion oracle at qt = 1, n = 0, m = 3: [2]/[2] * 1 = 1 (all q-integers are integers)
    w = weights_discrete(1.0, 0, 1, 10)
    r = weights_discrete_recursion(1.0, 0, 1, 10)
    assert_allclose(w[3], 1.0, rtol=1e-15)
    assert_allclose(r[3], 1.0, rtol=1e-12)


def test_weights_discrete_matches_recursion_at_q2_n1_m4():
    # window of D(1) is even: m = 4 is the second K-type
    w = weights_discrete(2.0, 1, 1, 10)
    r = weights_discrete_recursion(2.0, 1, 1, 10)
    assert_allclose(w[4], r[4], rtol=1e-12)


def test_discrete_window_examples():
    assert list(discrete_window(0, 1, 7)) == [1, 3, 5, 7]
    assert list(discrete_window(2, -1, 9)) == [-9, -7, -5, -3]
    assert list(parity_window(-1, 3)) == [-3, -1, 1, 3]


def test_realize_reproduces_t_inputs():
    rng = np.random.default_rng(3)
    window = parity_window(1, 12)
    k = len(window)
    td, tu, tdn = (rng.normal(size=k) + 1j * rng.normal(size=k) for _ in range(3))
    X, Xs, Z, th = realize_xztheta_from_t(td, tu, tdn, 2.0, window)
    m = TruncatedModule(Family.PrincipalQ, P2, 1, 1.0, None, window, np.ones(k), th, X, Xs, Z, 12)
    T, Tp, Tm = t_operators(m)
    assert_allclose(np.diag(T), td, atol=1e-13)
    up = np.array([Tp[i + 1, i] for i in range(k - 1)])
    dn = np.array([Tm[i - 1, i] for i in range(1, k)])
    assert_allclose(up, tu[:-1], atol=1e-13)
    assert_allclose(dn, tdn[1:], atol=1e-13)


def test_realize_zero_inputs_give_zero():
    w = parity_window(1, 6)
    z = np.zeros(len(w))
    X, Xs, Z, _ = realize_xztheta_from_t(z, z, z, 2.0, w)
    assert not X.any() and not Xs.any() and not Z.any()


def test_realize_well_conditioned_at_q_one():
    # the equilibrated 3x3 system stays solvable at qt = 1
    w = parity_window(1, 6)
    X, _, Z, th = realize_xztheta_from_t(np.full(len(w), 2.0), np.zeros(len(w)), np.zeros(len(w)), 1.0, w)
    assert_allclose(np.diag(th).real, w, atol=1e-15)


def test_principal_coefficients():
    m = build_principal_q(P2, 1, 1j, 10)
    _, Tp, _ = t_operators(m)
    i = m.index(0)
    assert_allclose(Tp[i + 1, i], 2.5j, atol=1e-14)
    m1 = build_principal_q(P2, 1, 1.0, 10)
    assert_allclose(np.diag(t_operators(m1)[0]), 2.0, atol=1e-14)


def test_principal_rejects_bad_input():
    with pytest.raises(DomainError):
        build_principal_q(P2, 1, 0.0, 10)
    with pytest.raises(DomainError):
        build_principal_q(DeformationPoint(1.0, 1.0), 1, 1j, 10)


@pytest.mark.parametrize("m", all_builders(), ids=lambda m: m.family.value)
def test_band_structure_and_theta(m):
    w = m.window
    far = np.abs(w[:, None] - w[None, :]) > 2
    for A in (m.X, m.Xs, m.Z, m.theta):
        assert not A[far].any()
    off = ~np.eye(m.dim, dtype=bool)
    assert not m.theta[off].any()
    th = np.diag(m.theta)
    assert np.all(th.imag == 0)
    if m.Q != 1.0:
        assert_allclose(th.real, [qint(int(k), m.Q) for k in w], rtol=1e-14)
    else:
        assert_allclose(th.real, w)
    assert np.all(m.weights > 0)


@pytest.mark.parametrize("m", all_builders(), ids=lambda m: m.family.value)
def test_json_roundtrip(m):
    text = m.to_json()
    doc = json.loads(text)
    assert list(doc)[:9] == ["family", "q", "t", "epsilon", "lambda", "order", "window", "weights", "matrices"]
    assert set(doc["matrices"]) >= {"theta", "X", "Z"}
    back = TruncatedModule.from_json(text)
    assert back.family is m.family
    for a, b in ((back.X, m.X), (back.Z, m.Z), (back.theta, m.theta), (back.Xs, m.Xs)):
        assert_allclose(a, b, atol=0)
    assert_allclose(back.weights, m.weights, rtol=0)


def test_module_is_immutable():
    m = build_motion(1j, 1, 10)
    with pytest.raises(ValueError):
        m.X[0, 0] = 1.0


def test_discrete_edge_coefficient_vanishes():
    full = build_principal_q(P2, -1, 2.0 ** 2, 20)
    _, Tp, Tm = t_operators(full)
    # T+ from -3 into -1 and T- from 3 into 1 leave D-(2) resp. D+(2): both coefficients vanish exactly
    assert abs(Tp[full.index(-1), full.index(-3)]) < 1e-13
    assert abs(Tm[full.index(1), full.index(3)]) < 1e-13
    d = build_discrete_q(P2, 1, 2, -1, 20)
    assert list(d.window) == list(discrete_window(2, -1, 20))


@pytest.mark.parametrize("qt", [0.5, 2.0, 1.3])
@pytest.mark.parametrize("sigma", [1, -1])
@pytest.mark.parametrize("n", range(0, 9))
def test_submodule_leakage(qt, sigma, n):
    full = build_principal_q(DeformationPoint(qt, 1.0), (-1) ** (n + 1), sigma * qt ** n, 40)
    for sign in (1, -1):
        assert leakage(full, discrete_window(n, sign, 40)) < 1e-12


def test_generic_point_leaks():
    full = build_principal_q(P2, -1, np.exp(0.3j), 20)
    assert leakage(full, discrete_window(0, 1, 20)) > 1e-2
    with pytest.raises(InvarianceError):
        build_discrete_q(P2, 1, 1, 1, 20, tol=-1.0)


def test_order_zero_windows_partition_odd_principal():
    w = set(parity_window(-1, 15).tolist())
    a = set(discrete_window(0, 1, 15).tolist())
    b = set(discrete_window(0, -1, 15).tolist())
    assert a | b == w and not a & b


def test_classical_ladder_and_invariant_subspaces():
    m = build_classical_principal(0.0, 1, 10)
    Lp = 2 * m.X - 2 * m.Z + m.theta
    assert_allclose(Lp[m.index(2), m.index(0)], 1.0, atol=1e-15)
    m = build_classical_principal(2.0, -1, 20)
    for sign in (1, -1):
        assert leakage(m, discrete_window(2, sign, 20)) == 0.0


def test_motion_and_groupoid_special_points():
    m = build_motion(0.0, 1, 10)
    assert not m.X.any() and not m.Z.any()
    m = build_motion(1j, 1, 10)
    _, Tp, _ = t_operators(m)
    assert_allclose(np.abs(Tp[m.index(2), m.index(0)]), 1.0)
    g = build_groupoid(1j, 1, 10)
    T, Tp, Tm = t_operators(g)
    assert_allclose(T, 0, atol=1e-15)
    assert_allclose(Tp[g.index(2), g.index(0)], 2j, atol=1e-15)
    g = build_groupoid(1.0, -1, 10)
    _, Tp, Tm = t_operators(g)
    assert not Tp.any() and not Tm.any()
    with pytest.raises(DomainError):
        build_groupoid(0.9, 1, 10)


@pytest.mark.parametrize("n", range(0, 4))
def test_invariant_windows_at_reducible_point(n):
    m = modgen.build_principal_q(DeformationPoint(2.0, 1.0), (-1) ** (n + 1), -(2.0 ** n), 20)
    found = modgen.invariant_windows(m)
    assert [list(w) for w in found] == [[-k for k in range(20, n, -1) if (k - n) % 2 == 1],
                                        [k for k in range(n + 1, 21) if (k - n) % 2 == 1]]


def test_invariant_windows_generic_point_is_irreducible():
    assert modgen.invariant_windows(modgen.build_principal_q(DeformationPoint(2.0, 1.0), 1, 1j, 20)) == []
