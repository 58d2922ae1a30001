import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from hinderfit.errors import DegenerateDof, DomainError, NonPositiveQ, TooShort, ValidationError, ZeroVariance
from hinderfit.stats import (
    TimeSeries,
    f_cdf,
    f_quantile,
    f_sf,
    f_test,
    growth_rates,
    mk_s,
    mk_test,
    normal_cdf,
    r2_fvu,
    regularized_incomplete_beta,
)


def brute_s(q):
    return sum(int(np.sign(q[j] - q[i])) for i, j in itertools.combinations(range(len(q)), 2))


# ---------------------------------------------------------------------------
# TimeSeries
# ---------------------------------------------------------------------------

def test_series_validation():
    with pytest.raises(ValidationError):
        TimeSeries([0, 0], [1, 2])
    with pytest.raises(NonPositiveQ):
        TimeSeries([0, 1], [1, 0])
    with pytest.raises(TooShort):
        TimeSeries([0], [1])
    with pytest.raises(ValidationError):
        TimeSeries([0, 1], [1, 2, 3])
    assert len(TimeSeries([0], [-1.0], positive=False)) == 1


def test_series_arrays_are_read_only():
    s = TimeSeries([0, 1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        s.Q[0] = 5.0


def test_series_helpers():
    s = TimeSeries([0, 1, 2], [1, 2, 4])
    assert list(s.scaled(2).Q) == [2, 4, 8]
    assert list(s.shifted(10).t) == [10, 11, 12]
    assert len(s.head(2)) == 2


# ---------------------------------------------------------------------------
# Mann-Kendall
# ---------------------------------------------------------------------------

def test_strictly_increasing_eight_points():
    r = mk_test(np.arange(1.0, 9.0))
    assert r.S == 28
    assert r.var_S == pytest.approx(8 * 7 * 21 / 18)
    # Z = 27 / sqrt(196/3)
    assert r.Z == pytest.approx(3.340383700311406, rel=1e-12)
    assert r.p_one_tailed < 0.001
    assert r.rejects(0.05)


def test_decreasing_direction():
    r = mk_test(np.arange(10.0, 0.0, -1.0), "decreasing")
    assert r.S == -45
    assert r.rejects(0.05)
    assert not mk_test(np.arange(10.0, 0.0, -1.0), "increasing").rejects(0.05)


def test_mk_errors():
    with pytest.raises(TooShort):
        mk_test(np.arange(7.0))
    with pytest.raises(ZeroVariance):
        mk_test(np.ones(10))
    with pytest.raises(DomainError):
        mk_test(np.arange(10.0), "sideways")


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=25))
@settings(max_examples=200, deadline=None)
def test_s_matches_brute_force(values):
    q = np.array(values, dtype=float)
    assert mk_s(q) == brute_s(q)


@given(st.lists(st.integers(-4, 4), min_size=8, max_size=40))
@settings(max_examples=200, deadline=None)
def test_tie_corrected_variance_matches_kendall_tau_b(values):
    # with t = 0..n-1 there are no ties in time, and
    # S / sqrt(n0 (n0 - n_ties)) is Kendall's tau-b
    q = np.array(values, dtype=float)
    n = q.size
    if np.unique(q).size < 2:
        return
    r = mk_test(q)
    tau = sps.kendalltau(np.arange(n), q).statistic
    n0 = n * (n - 1) / 2
    _, counts = np.unique(q, return_counts=True)
    n2 = float(np.sum(counts * (counts - 1) / 2))
    assert r.S == pytest.approx(tau * math.sqrt(n0 * (n0 - n2)), abs=1e-9)
    expected = (n * (n - 1) * (2 * n + 5) - np.sum(counts * (counts - 1) * (2 * counts + 5))) / 18
    assert r.var_S == pytest.approx(expected)


@given(st.permutations(list(range(12))))
@settings(max_examples=100, deadline=None)
def test_reversal_flips_sign(perm):
    q = np.array(perm, dtype=float)
    assert mk_s(q[::-1]) == -mk_s(q)
    a, b = mk_test(q, "increasing"), mk_test(q, "decreasing")
    assert a.p_one_tailed + b.p_one_tailed == pytest.approx(1.0, abs=1e-12)


def test_null_rejection_rate_on_permutations():
    rng = np.random.default_rng(20240)
    hits = sum(mk_test(rng.permutation(20).astype(float)).rejects(0.05) for _ in range(4000))
    assert 0.03 <= hits / 4000 <= 0.07


# ---------------------------------------------------------------------------
# growth rates
# ---------------------------------------------------------------------------

def test_growth_rates_exact_for_exponential():
    t = np.array([0.0, 0.5, 2.0, 3.0])
    g = growth_rates(TimeSeries(t, 3.0 * np.exp(0.7 * t)))
    np.testing.assert_allclose(g.Q, 0.7, rtol=1e-13)
    np.testing.assert_allclose(g.t, [0.25, 1.25, 2.5])


def test_growth_rates_of_two_points():
    g = growth_rates(TimeSeries([0.0, 1.0], [1.0, math.e]))
    assert len(g) == 1 and g.Q[0] == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

@given(st.floats(0.05, 50), st.floats(0.05, 50), st.floats(0.0, 1.0))
@settings(max_examples=300, deadline=None)
def test_incomplete_beta_matches_scipy(a, b, x):
    assert regularized_incomplete_beta(a, b, x) == pytest.approx(sps.beta.cdf(x, a, b), rel=1e-10, abs=1e-14)


@given(st.integers(1, 30), st.integers(1, 500), st.floats(0.0, 200.0))
@settings(max_examples=300, deadline=None)
def test_f_distribution_matches_reference(d1, d2, F):
    assert f_cdf(F, d1, d2) == pytest.approx(sps.f.cdf(F, d1, d2), rel=1e-10, abs=1e-14)
    # scipy's sf rounds to 1 for tiny F, so the upper tail is checked at 30 digits
    with mpmath.workdps(30):
        x = mpmath.mpf(d1) * F / (mpmath.mpf(d1) * F + d2)
        ref = float(mpmath.betainc(d2 / 2, d1 / 2, 0, 1 - x, regularized=True)) if F > 0 else 1.0
    assert f_sf(F, d1, d2) == pytest.approx(ref, rel=1e-9, abs=1e-300)


def test_f_cdf_median_for_equal_dof():
    assert f_cdf(1.0, 10, 10) == pytest.approx(0.5, abs=1e-14)


def test_f_sf_tiny_tail_without_cancellation():
    assert f_sf(500.0, 1, 200) == pytest.approx(sps.f.sf(500.0, 1, 200), rel=1e-9)
    assert f_sf(500.0, 1, 200) < 1e-50


def test_f_quantile_inverts_cdf():
    q = f_quantile(0.95, 1, 195)
    assert q == pytest.approx(sps.f.ppf(0.95, 1, 195), rel=1e-10)


def test_normal_cdf():
    assert normal_cdf(1.96) == pytest.approx(sps.norm.cdf(1.96), rel=1e-14)


def test_special_function_domains():
    with pytest.raises(DomainError):
        regularized_incomplete_beta(0.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        regularized_incomplete_beta(1.0, 1.0, 1.5)
    with pytest.raises(DomainError):
        f_cdf(-1.0, 1, 1)
    with pytest.raises(DomainError):
        f_quantile(1.0, 1, 1)


# ---------------------------------------------------------------------------
# F-test and fit statistics
# ---------------------------------------------------------------------------

def test_f_test_statistic():
    r = f_test(2.0, 1.0, 3, 4, 100)
    assert r.F == pytest.approx(96.0)
    assert (r.df1, r.df2) == (1, 96)
    assert r.p_value == pytest.approx(sps.f.sf(96.0, 1, 96), rel=1e-9)
    assert r.reject_null
    assert r.F_crit == pytest.approx(sps.f.ppf(0.95, 1, 96), rel=1e-9)


def test_f_test_edge_cases():
    worse = f_test(1.0, 1.5, 3, 4, 50)
    assert worse.F == 0.0 and worse.p_value == 1.0 and not worse.reject_null
    perfect = f_test(1.0, 0.0, 3, 4, 50)
    assert perfect.F == math.inf and perfect.p_value == 0.0
    with pytest.raises(DegenerateDof):
        f_test(1.0, 0.5, 3, 4, 4)
    with pytest.raises(DomainError):
        f_test(1.0, 0.5, 4, 4, 40)


def test_r2_fvu():
    data = np.array([1.0, 2.0, 3.0, 4.0])
    r2, fvu = r2_fvu(data, data)
    assert (r2, fvu) == (1.0, 0.0)
    r2, fvu = r2_fvu(data, np.full(4, 2.5))
    assert fvu == pytest.approx(1.0) and r2 == pytest.approx(0.0)
    _, fvu_log = r2_fvu(data, data * 1.01, log=True)
    assert fvu_log == pytest.approx(4 * math.log(1.01) ** 2 / np.sum((np.log(data) - np.log(data).mean()) ** 2))
    with pytest.raises(ZeroVariance):
        r2_fvu(np.ones(3), np.ones(3))
