from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qsl2r.afield import (AFIELD_RELATIONS, AnalyticLambda, assembled_images, check_afield_relations, convergence,
                          kappa, kappa_matrices, loglog_slope, s_operator_images, target_module,
                          verify_specialization)
from qsl2r.algcheck import all_passed
from qsl2r.errors import DomainError, FamilyMismatch
from qsl2r.modgen import Family, build_motion
from qsl2r.scalars import eta

LAM_I = AnalyticLambda.power(1j)


def test_analytic_lambda_validation():
    with pytest.raises(DomainError):
        AnalyticLambda(lambda q, t: 2.0)
    lam = AnalyticLambda(lambda q, t: q ** (1j * t))
    assert_allclose(lam.dq_at_one(0.3), 0.3j, atol=1e-10)


def test_kappa_table_rows():
    lam = LAM_I
    kn, kp, km = kappa(2.0, 0.0, 3, lam)
    h = 2 * math.log(2)
    assert kn == 0.0 and kp == 0.0 and km == 0.0  # lam(q, 0) = 1
    kn, kp, km = kappa(1.0, 0.0, 3, lam)
    assert kn == 0
    assert_allclose([kp, km], [0.0, 0.0], atol=1e-10)
    chart = AnalyticLambda.chart(0.7j)
    kn, kp, km = kappa(2.0, 0.0, 1, chart)
    v = 2.0 ** 0.7j
    assert_allclose(kn, (v + 1 / v - 2) / h, rtol=1e-14)
    assert_allclose(kp, (v - 1 / v) / h, rtol=1e-14)
    _, kp, km = kappa(1.0, 0.0, 5, chart)
    assert_allclose([kp, km], [0.7j, 0.7j], atol=1e-9)


def test_kappa_finite_difference_example():
    # lam = q^{it}, q = 1, t = 0.1, n = 2: kappa+ = 0.1i + 0.3
    _, kp, km = kappa(1.0, 0.1, 2, LAM_I)
    assert_allclose(kp, 0.3 + 0.1j, atol=1e-10)
    assert_allclose(km, -0.1 + 0.1j, atol=1e-10)
    _, kp_exact, _ = kappa(1.0, 0.1, 2, LAM_I, exact=True)
    assert_allclose(kp, kp_exact, atol=1e-10)


def test_kappa_generic_continuous_into_q_one():
    lam = AnalyticLambda.power(2.5j)
    for n in (-3, 0, 4):
        ref = np.array(kappa(1.0, 0.4, n, lam, exact=True))
        near = np.array(kappa(1 + 1e-6, 0.4, n, lam))
        assert_allclose(near, ref, atol=1e-4)


@pytest.mark.parametrize("q,t", [(2.0, 0.5), (0.5, 1.0), (2.0, 0.0), (1.0, 0.5), (1.0, 0.0), (1.3, -0.7)])
def test_assembled_images_equal_kappa_tables(q, t):
    lam = AnalyticLambda.power(1j)
    mod = target_module(q, t, 1, lam, 20)
    mask = mod.interior()
    for A, B in zip(assembled_images(q, t, mod), kappa_matrices(q, t, lam, mod.window)):
        assert_allclose(A[np.ix_(mask, mask)], B[np.ix_(mask, mask)], atol=1e-9)


def test_s_operator_images_column_matches_assembled():
    mod = target_module(2.0, 0.5, -1, LAM_I, 15)
    S, Sp, Sm = assembled_images(2.0, 0.5, mod)
    j = mod.index(3)
    s, sp, sm = s_operator_images(2.0, 0.5, 3, mod)
    assert_allclose(s[:, j], S[:, j], atol=1e-13)
    assert_allclose(sp[:, j], Sp[:, j], atol=1e-13)


def test_target_module_families():
    assert target_module(2.0, 0.5, 1, LAM_I, 10).family is Family.PrincipalQ
    assert target_module(2.0, 0.0, 1, LAM_I, 10).family is Family.Groupoid
    assert target_module(1.0, 0.5, 1, LAM_I, 10).family is Family.ClassicalPrincipal
    assert target_module(1.0, 0.0, 1, LAM_I, 10).family is Family.Motion
    disc = AnalyticLambda.power(3.0)
    m = target_module(2.0, 0.5, 1, disc, 10)
    assert_allclose(m.lam, 2.0 ** 1.5)


def test_family_mismatch_raises():
    with pytest.raises(FamilyMismatch):
        s_operator_images(2.0, 0.5, 0, build_motion(1j, 1, 10))


@pytest.mark.parametrize("q,t", [(2.0, 0.5), (0.5, 1.0), (1.5, 1e-3), (1.0, 0.5), (1.0, 0.0), (2.0, 0.0)])
def test_five_relations(q, t):
    mod = target_module(q, t, 1, AnalyticLambda.power(1j), 30)
    reps = check_afield_relations(q, t, mod)
    assert [r.relation for r in reps] == list(AFIELD_RELATIONS)
    assert all_passed(reps), [(r.relation, r.residual) for r in reps]


def test_loglog_slope_exact_power():
    h = np.array([1e-1, 1e-2, 1e-3])
    assert_allclose(loglog_slope(h, 3 * h ** 2), 2.0, rtol=1e-12)


@pytest.mark.parametrize("mu", [0.0, 1.0, 2.5])
def test_convergence_orders(mu):
    lam = AnalyticLambda.power(1j * mu)
    steps = (1e-1, 1e-2, 1e-3, 1e-4)
    for direction, fixed in (("t", 2.0), ("t", 0.5), ("q", 0.7)):
        r = convergence(lam, 1, direction, fixed, steps)
        assert r.passed(), (direction, fixed, r.slopes)


def test_verify_specialization_csv():
    rep = verify_specialization(LAM_I, -1, [(2.0, 0.5), (1.0, 0.0)])
    assert rep.passed
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "q,t,family,max_kappa_err,max_relation_residual,pass"
    assert len(lines) == 3


def test_discrete_family_windows_split_at_t_zero():
    # lam = q^{n t}: at t != 0 the module is reducible at sigma q^{nt}; at t = 0 the groupoid module at 1 splits
    lam = AnalyticLambda.power(2.0)
    m = target_module(2.0, 0.0, -1, lam, 12)
    _, Tp, Tm = (m.X + m.Xs, m.X - m.Xs - 2 * m.Z, m.X - m.Xs + 2 * m.Z)
    assert not np.abs(Tp).max() > 1e-15 and not np.abs(Tm).max() > 1e-15


def test_eta_scaling_of_tolerance():
    from qsl2r.afield import afield_tolerance
    assert afield_tolerance(2.0, 1.0) == 1e-9
    assert afield_tolerance(1 + 1e-4, 1.0) > 1e-9
    assert afield_tolerance(1.0, 0.3) == 1e-9
    assert eta(1 + 1e-4, 1.0) > 0


def test_relations_negative_control():
    import dataclasses

    mod = target_module(2.0, 0.5, 1, LAM_I, 20)
    bad = dataclasses.replace(mod, Z=mod.Z * 1.001)
    assert not all_passed(check_afield_relations(2.0, 0.5, bad))
