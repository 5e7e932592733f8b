from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from scipy.special import erfcx

from tfdinv.errors import AccuracyWarning, DomainError
from tfdinv.mittag_leffler import (
    MLQuery,
    _asymptotic,
    _contour,
    _series,
    mittag_leffler,
    ml_kernel_pair,
)

# 200-digit power-series sums (mpmath), frozen
FROZEN = [
    (0.5, 1.0, -1.0, 0.42758357615580700441),
    (0.7, 1.0, -3.0, 0.13789710966502708216),
    (0.3, 0.3, -2.0, 0.03206239921884749485),
    (0.3, 1.0, -5.0, 0.13708086902027063889),
    (0.8, 1.2, -11.0, 0.043350220460064537101),
    (0.6, 0.6, -20.0, 0.00069976531797853914304),
    (0.4, 1.0, -7.5, 0.08533799684368093571),
    (0.9, 0.9, -4.0, 0.019923847142786249631),
    (0.8, 0.8, -9.0, 0.0029001821764335287112),
    (0.5, 1.5, 2.5, 413.92593718904916332),
    (0.7, 1.0, 10.0, 639295673243.01708451),
    (0.6, 1.0, -50.0, 0.0090837447731034546371),
    (0.7, 0.7, -100.0, 2.377720552356958089e-05),
]


@pytest.mark.parametrize("alpha, beta, x, expected", FROZEN)
def test_against_high_precision_series(alpha, beta, x, expected):
    assert mittag_leffler(alpha, beta, x) == pytest.approx(expected, rel=1e-12)


def test_live_mpmath_oracle():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 60

    def ml(a, b, x):
        a, b, x = mp.mpf(a), mp.mpf(b), mp.mpf(x)
        return mp.nsum(lambda k: x**k / mp.gamma(a * k + b), [0, mp.inf])

    for a, b, x in [(0.45, 1.0, -2.5), (0.65, 0.65, -6.0), (0.85, 1.85, -3.3)]:
        assert mittag_leffler(a, b, x) == pytest.approx(float(ml(a, b, x)), rel=1e-12)


def test_value_at_zero():
    assert mittag_leffler(0.7, 1.0, 0.0) == 1.0
    assert mittag_leffler(0.4, 2.5, 0.0) == pytest.approx(1.0 / math.gamma(2.5), rel=1e-15)


def test_exponential_case():
    assert mittag_leffler(1.0, 1.0, -1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    x = np.geomspace(1e-3, 50.0, 50)
    np.testing.assert_allclose(mittag_leffler(1.0, 1.0, -x), np.exp(-x), rtol=1e-12)


def test_half_order_erfc_identity():
    assert mittag_leffler(0.5, 1.0, -1.0) == pytest.approx(0.427583576156, abs=1e-12)
    x = np.linspace(0.0, 10.0, 101)
    np.testing.assert_allclose(mittag_leffler(0.5, 1.0, -x), erfcx(x), rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_complete_monotonicity_samples(alpha):
    x = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 200)])
    v = mittag_leffler(alpha, 1.0, -x)
    assert np.all(v > 0.0)
    assert np.all(np.diff(v) < 0.0)
    assert np.all(mittag_leffler(alpha, alpha, -x) >= 0.0)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_algebraic_decay(alpha):
    x = 1e4
    assert x * mittag_leffler(alpha, 1.0, -x) == pytest.approx(1.0 / math.gamma(1.0 - alpha), rel=1e-2)


@pytest.mark.parametrize("alpha, beta", [(0.3, 1.0), (0.5, 1.0), (0.7, 0.7), (0.9, 1.9)])
def test_series_and_contour_agree_at_switch(alpha, beta):
    x = np.array([-1.0])
    vs, _ = _series(alpha, beta, x)
    vc, _ = _contour(alpha, beta, x)
    assert abs(vs[0] - vc[0]) <= 1e-11 * abs(vs[0])


@pytest.mark.parametrize("alpha, beta", [(0.3, 1.0), (0.3, 0.3), (0.8, 0.8), (0.9, 1.0)])
def test_contour_and_asymptotic_agree_where_certified(alpha, beta):
    x = np.array([-12.0, -30.0, -100.0])
    va, ea = _asymptotic(alpha, beta, x)
    vc, _ = _contour(alpha, beta, x)
    certified = ea <= 4.0 * np.finfo(float).eps * np.abs(va)
    assert np.any(certified)
    np.testing.assert_allclose(va[certified], vc[certified], rtol=1e-11)


def test_error_estimate_is_returned_and_bounds_true_error():
    v, e = mittag_leffler(0.6, 1.0, np.array([-0.5, -4.0, -50.0]), return_error=True)
    assert v.shape == e.shape == (3,)
    assert np.all(e <= 1e-11 * np.abs(v))
    assert abs(v[2] - 0.0090837447731034546371) <= e[2]


def test_shape_is_preserved():
    x = -np.arange(6.0).reshape(2, 3)
    assert mittag_leffler(0.5, 1.0, x).shape == (2, 3)
    assert np.ndim(mittag_leffler(0.5, 1.0, -2.0)) == 0


@pytest.mark.parametrize("alpha, beta", [(0.0, 1.0), (1.2, 1.0), (0.5, 0.0), (0.5, -1.0)])
def test_parameter_domain(alpha, beta):
    with pytest.raises(DomainError):
        mittag_leffler(alpha, beta, -1.0)
    with pytest.raises(DomainError):
        MLQuery(alpha, beta, -1.0)


def test_argument_domain():
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0, 10.5)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0, math.nan)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0, -1.0, x_lo=5.0, x_hi=2.0)


def test_no_accuracy_warning_in_supported_range():
    x = -np.geomspace(1e-3, 1e4, 300)
    with warnings.catch_warnings():
        warnings.simplefilter("error", AccuracyWarning)
        for alpha in (0.2, 0.5, 0.95):
            mittag_leffler(alpha, 1.0, x)
            mittag_leffler(alpha, alpha, x)


def test_query_object():
    assert MLQuery(0.5, 1.0, -1.0).evaluate() == pytest.approx(0.42758357615580700441, rel=1e-14)


# {{{ kernel pair


def test_kernel_pair_zero_lambda():
    t = np.array([0.1, 0.5, 2.0])
    e1, k = ml_kernel_pair(0.6, 0.0, t)
    np.testing.assert_allclose(e1, 1.0, rtol=0, atol=0)
    np.testing.assert_allclose(k, t ** (-0.4) / math.gamma(0.6), rtol=1e-14)


def test_kernel_pair_classical_limit():
    e1, k = ml_kernel_pair(1.0, 2.0, 0.5)
    assert e1 == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert k == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_kernel_pair_derivative_identity():
    alpha, lam, t, h = 0.6, 3.0, 0.7, 1e-4
    ep, _ = ml_kernel_pair(alpha, lam, t + h)
    em, _ = ml_kernel_pair(alpha, lam, t - h)
    _, k = ml_kernel_pair(alpha, lam, t)
    assert (ep - em) / (2 * h) == pytest.approx(-lam * k, rel=1e-6)


def test_kernel_pair_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        ml_kernel_pair(0.5, 1.0, 0.0)


# }}}
