from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qsl2r.errors import DomainError
from qsl2r.scalars import (DeformationPoint, eta, pri_chart, pri_chart_inverse, qint, qint_array,
                           qpow_diff_ratio)

qs = st.floats(0.2, 5.0)
ns = st.integers(-40, 40)


@pytest.mark.parametrize("n,q,expected", [(2, 2.0, 2.5), (0, 2.0, 0.0), (0, 0.3, 0.0), (3, 2.0, 5.25), (5, 1.0, 5.0)])
def test_qint_values(n, q, expected):
    assert_allclose(qint(n, q), expected, rtol=1e-15, atol=0)


@given(ns, qs)
def test_qint_odd_in_n(n, q):
    assert_allclose(qint(-n, q), -qint(n, q), rtol=1e-14, atol=0)


@given(ns, qs)
def test_qint_inversion_symmetry(n, q):
    assert_allclose(qint(n, 1 / q), qint(n, q), rtol=1e-12, atol=0)


@given(ns, st.floats(1e-11, 1e-7))
def test_qint_smooth_through_one(n, d):
    # series band and exact branch agree with the analytic limit
    assert_allclose(qint(n, 1 + d), n, rtol=1e-6, atol=0)


def test_qint_array_matches_scalar():
    ns_ = np.arange(-10, 11)
    assert_allclose(qint_array(ns_, 1.7), [qint(int(n), 1.7) for n in ns_], rtol=1e-15)


def test_qpow_diff_ratio_limit_and_generic():
    assert qpow_diff_ratio(5.0, 1.0, 0.0) == 2.0
    h = math.log(2.0)
    assert_allclose(qpow_diff_ratio(3.0, -3.0, h), qint(3, 2.0), rtol=1e-15)


@pytest.mark.parametrize("q,t,expected", [(2.0, 0.0, 2 * math.log(2)), (1.0, 0.7, 0.0), (1.0, 0.0, 0.0),
                                          (2.0, 1.0, 1.5)])
def test_eta_values(q, t, expected):
    assert_allclose(eta(q, t), expected, rtol=1e-14, atol=0)


@given(qs, st.floats(-3, 3))
def test_eta_even_in_t(q, t):
    assert_allclose(eta(q, -t), eta(q, t), rtol=1e-13, atol=1e-300)


def test_eta_continuous_at_t_zero():
    for k in range(1, 13):
        assert_allclose(eta(2.0, 10.0 ** -k), 2 * math.log(2), rtol=10.0 ** (-2 * k) + 1e-15)


def test_eta_over_q_minus_one_bounded_near_one():
    vals = [eta(1 + d, 0.7) / d for d in (1e-1, 1e-3, -1e-3, 1e-6, -1e-6)]
    assert all(0.5 < abs(v) < 5 for v in vals)


@pytest.mark.parametrize("q,lam,expected", [(math.e, 1j * math.pi / 2, 1j), (3.0, 0.0, 1.0),
                                            (2.0, 1j, complex(math.cos(math.log(2)), math.sin(math.log(2))))])
def test_pri_chart_values(q, lam, expected):
    assert_allclose(pri_chart(q, lam), expected, atol=1e-15)


@given(st.floats(1.1, 5.0), st.floats(0.0, 2.0))
def test_pri_chart_roundtrip(q, y):
    lam = 1j * y
    assert_allclose(pri_chart_inverse(q, pri_chart(q, lam)), lam, atol=1e-12)
    assert abs(abs(pri_chart(q, lam)) - 1) < 1e-14


def test_pri_chart_lower_half_for_q_below_one_and_fold():
    z = pri_chart(0.5, 1j)
    assert z.imag < 0
    assert pri_chart(0.5, 1j, fold=True).imag > 0


def test_pri_chart_rejects_wrapping():
    with pytest.raises(DomainError):
        pri_chart(2.0, 10j)


def test_deformation_point_flags():
    p = DeformationPoint(2.0, 0.0)
    assert p.contracted and not p.classical
    assert DeformationPoint(1.0, 0.5).classical
    assert_allclose(DeformationPoint(2.0, 0.5).qt, math.sqrt(2), rtol=1e-15)
    with pytest.raises(DomainError):
        DeformationPoint(-1.0, 1.0)
