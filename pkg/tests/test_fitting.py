import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from hinderfit import fitting
from hinderfit.errors import DomainError, GateFailure, LogisticDomain, TooShort, UnsupportedFamily
from hinderfit.fitting import (
    FitResult,
    GrowthModel,
    check_growth_preconditions,
    fit_family,
    n_params,
    predict,
    refit_frozen,
    rss,
    run_ladder,
    select_minimal,
    xh_shift,
)
from hinderfit.kernel import Exponential, GompertzRef, HinderingWeights, Logistic, MultiTerm, SingleTerm
from hinderfit.stats import TimeSeries

TWO_TERM = MultiTerm(HinderingWeights({1: 0.5, 8: 0.5}))


def make_series(model, t0, t1, n=120, sigma=0.0, seed=0):
    t = np.linspace(t0, t1, n)
    noise = np.exp(sigma * np.random.default_rng(seed).standard_normal(n))
    return TimeSeries(t, predict(model, t) * noise)


def rel(a, b):
    return abs(a / b - 1.0)


# ---------------------------------------------------------------------------
# model basics
# ---------------------------------------------------------------------------

def test_parameter_counts():
    assert n_params(Exponential()) == 2
    assert n_params(SingleTerm(4)) == 3
    assert n_params(Logistic()) == 3
    assert n_params(TWO_TERM) == 4
    assert n_params(MultiTerm(HinderingWeights({1: 0.2, 2: 0.3, 5: 0.5}))) == 5


def test_model_validation():
    with pytest.raises(DomainError):
        GrowthModel(SingleTerm(1), g_u=0.0, Q_h=1.0, t_h=0.0)
    with pytest.raises(DomainError):
        GrowthModel(SingleTerm(1), g_u=1.0, Q_h=-1.0, t_h=0.0)
    with pytest.raises(UnsupportedFamily):
        GrowthModel(GompertzRef(1.0, 1.0, 1.0), g_u=1.0, Q_h=1.0, t_h=0.0)


@pytest.mark.parametrize("family", [SingleTerm(1), SingleTerm(5), Logistic(), TWO_TERM])
def test_value_at_hindering_time_is_q_h(family):
    m = GrowthModel(family, g_u=0.3, Q_h=42.0, t_h=7.0)
    assert predict(m, 7.0) == pytest.approx(42.0, rel=1e-15)


def test_rss_of_exact_data_is_zero():
    m = GrowthModel(SingleTerm(2), 0.1, 50.0, 20.0)
    assert rss(m, make_series(m, 0, 60)) == pytest.approx(0.0, abs=1e-25)


def test_near_exponential_limit():
    # with Q_h far above the data, single-term growth is exponential to O(Q/Q_h)
    q0, eps = 3.0, 1e-8
    t = np.linspace(0, 5, 21)
    exp_model = GrowthModel(Exponential(), 0.4, q0, 0.0)
    for k in (1, 3):
        x_h = xh_shift(SingleTerm(k), 1.0 / eps)
        sth = GrowthModel(SingleTerm(k), 0.4, q0 / eps, x_h / 0.4)
        np.testing.assert_allclose(predict(sth, t), predict(exp_model, t), rtol=1e-7)


# ---------------------------------------------------------------------------
# hindering-time shift
# ---------------------------------------------------------------------------

def test_shift_reference_values():
    assert xh_shift(SingleTerm(2), 2.0) == pytest.approx(1.068147180559945, rel=1e-14)
    assert xh_shift(Logistic(), 2.0) == pytest.approx(math.log(3.0), rel=1e-15)
    with pytest.raises(LogisticDomain):
        xh_shift(Logistic(), 0.5)
    with pytest.raises(DomainError):
        xh_shift(SingleTerm(1), 0.0)


@given(st.sampled_from([SingleTerm(1), SingleTerm(3), Logistic(), TWO_TERM]), st.floats(0.6, 50.0))
@settings(max_examples=100, deadline=None)
def test_shift_places_first_value(family, q_h):
    # a model whose hindering point sits x_h after t0 starts at Q_h / q_h
    m = GrowthModel(family, g_u=0.5, Q_h=10.0, t_h=2.0 * xh_shift(family, q_h))
    assert predict(m, 0.0) == pytest.approx(10.0 / q_h, rel=1e-10)


def test_multi_term_shift_reduces_to_single_term():
    one = MultiTerm(HinderingWeights({3: 1.0}))
    assert xh_shift(one, 4.0) == pytest.approx(xh_shift(SingleTerm(3), 4.0), rel=1e-14)


# ---------------------------------------------------------------------------
# gates
# ---------------------------------------------------------------------------

def test_gates_pass_for_hindered_growth():
    s = make_series(GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0), 0, 300, n=60, sigma=0.01)
    gate = check_growth_preconditions(s)
    assert gate.passed and gate.q_trend.rejects(0.05) and gate.g_trend.rejects(0.05)


def test_gates_fail_for_unhindered_growth():
    s = make_series(GrowthModel(Exponential(), 0.05, 10.0, 0.0), 0, 100, n=60, sigma=0.01, seed=4)
    gate = check_growth_preconditions(s)
    assert gate.failed == ("g_decreasing",)


def test_gates_fail_for_declining_series():
    t = np.arange(20.0)
    gate = check_growth_preconditions(TimeSeries(t, 100.0 - t))
    assert "q_increasing" in gate.failed


def test_gate_needs_eight_rates():
    t = np.arange(8.0)
    gate = check_growth_preconditions(TimeSeries(t, 1.0 + t))
    assert gate.failed == ("g_too_short",)
    with pytest.raises(TooShort):
        check_growth_preconditions(TimeSeries(t[:7], 1.0 + t[:7]))


# ---------------------------------------------------------------------------
# single-family fits
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("model,t1", [
    (GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0), 300.0),
    (GrowthModel(SingleTerm(3), 0.05, 1000.0, 100.0), 300.0),
    (GrowthModel(Logistic(), 0.1, 500.0, 50.0), 120.0),
    (GrowthModel(TWO_TERM, 0.2, 1000.0, 30.0), 150.0),
    (GrowthModel(Exponential(), 0.03, 7.0, 0.0), 100.0),
])
def test_noiseless_recovery(model, t1):
    s = make_series(model, 0.0, t1)
    fit = fit_family(s, model.family)
    got = fit.model
    assert rel(got.g_u, model.g_u) < 1e-6
    assert rel(got.Q_h, model.Q_h) < 1e-6
    assert abs(got.t_h - model.t_h) < 1e-4 * t1
    if isinstance(model.family, MultiTerm):
        for k, a in model.family.weights.terms.items():
            assert got.family.weights.terms[k] == pytest.approx(a, rel=1e-5)
    assert fit.rss < 1e-12
    assert fit.converged


def test_fit_from_given_start():
    truth = GrowthModel(SingleTerm(2), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300, sigma=0.01, seed=2)
    guess = GrowthModel(SingleTerm(2), 0.04, 900.0, 110.0)
    fit = fit_family(s, SingleTerm(2), init=guess)
    assert fit.restarts_used == 1
    assert rel(fit.model.g_u, truth.g_u) < 0.05


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fit_is_scale_and_shift_equivariant(seed):
    truth = GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300, sigma=0.02, seed=seed)
    base = fit_family(s, SingleTerm(1)).model
    scaled = fit_family(s.scaled(1e6), SingleTerm(1)).model
    shifted = fit_family(s.shifted(1950.0), SingleTerm(1)).model
    assert rel(scaled.Q_h, 1e6 * base.Q_h) < 1e-6
    assert rel(scaled.g_u, base.g_u) < 1e-6
    assert shifted.t_h - 1950.0 == pytest.approx(base.t_h, abs=1e-4)
    assert rel(shifted.g_u, base.g_u) < 1e-6


def test_profiled_scale_is_optimal():
    # nudging Q_h away from the fitted value never lowers the objective
    truth = GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300, sigma=0.02, seed=5)
    fit = fit_family(s, SingleTerm(1))
    m = fit.model
    assert fit.rss == pytest.approx(rss(m, s), rel=1e-12)
    for factor in (0.999, 1.001):
        nudged = GrowthModel(m.family, m.g_u, m.Q_h * factor, m.t_h)
        assert rss(nudged, s) > fit.rss


def test_fit_agrees_with_generic_simplex():
    # reference: scipy's Nelder-Mead on the unprofiled three-parameter objective
    truth = GrowthModel(SingleTerm(2), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300, sigma=0.02, seed=7)
    fit = fit_family(s, SingleTerm(2))

    def objective(p):
        m = GrowthModel(SingleTerm(2), math.exp(p[0]), math.exp(p[1]), p[2])
        return rss(m, s)

    p0 = [math.log(0.04), math.log(800.0), 90.0]
    ref = optimize.minimize(objective, p0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000, "maxfev": 20000})
    assert fit.rss <= ref.fun * (1 + 1e-8)
    assert rel(fit.model.g_u, math.exp(ref.x[0])) < 1e-4


def test_more_terms_never_fit_worse_than_nested_model():
    truth = GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300, sigma=0.02, seed=3)
    one = fit_family(s, SingleTerm(1))
    two = fit_family(s, MultiTerm(HinderingWeights({1: 0.9, 4: 0.1})))
    assert two.rss <= one.rss * (1 + 1e-6)


def test_refit_frozen_keeps_parameters():
    truth = GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300)
    fr = refit_frozen(s, truth)
    assert fr.model is truth and fr.rss < 1e-25 and fr.restarts_used == 0


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------

def _fake(family, value):
    return FitResult(GrowthModel(family, 1.0, 1.0, 0.0), value, 10, n_params(family), 0.0, 0.0, True, 1)


def test_ties_prefer_smaller_order_then_single_term():
    pick = fitting._choose_minimal([_fake(SingleTerm(3), 1.0), _fake(SingleTerm(2), 1.0)], _fake(Logistic(), 1.0))
    assert pick.model.family == SingleTerm(2)
    pick = fitting._choose_minimal([], _fake(Logistic(), 1.0))
    assert pick.model.family == Logistic()
    pick = fitting._choose_minimal([_fake(SingleTerm(1), 2.0)], _fake(Logistic(), 1.0))
    assert pick.model.family == Logistic()


def test_select_minimal_finds_true_order():
    truth = GrowthModel(SingleTerm(2), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300, n=200, sigma=0.02, seed=11)
    sel = select_minimal(s)
    assert sel.chosen.model.family == SingleTerm(2)
    assert sel.logistic.rss > sel.chosen.rss


def test_ladder_rejects_gate_failures():
    t = np.arange(30.0)
    with pytest.raises(GateFailure) as info:
        run_ladder(TimeSeries(t, 100.0 - t))
    assert "q_increasing" in info.value.gate.failed
    with pytest.raises(TooShort):
        run_ladder(TimeSeries(t[:6], 1.0 + t[:6]))


def test_ladder_on_logistic_data_stops_at_logistic():
    truth = GrowthModel(Logistic(), 0.1, 1000.0, 50.0)
    s = make_series(truth, 0, 120, n=200, sigma=0.02, seed=1)
    rep = run_ladder(s)
    assert rep.chosen.model.family == Logistic()
    assert len(rep.f_chain) == 1 and rep.f_chain[0].reject_null
    assert rep.f_labels == [("exponential", "logistic")]
    assert rep.q_h_ratio == pytest.approx(rep.chosen.model.Q_h / s.Q[0])


def test_ladder_on_single_term_data_rejects_second_term():
    truth = GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0)
    s = make_series(truth, 0, 300, n=200, sigma=0.02, seed=6)
    rep = run_ladder(s)
    assert rep.chosen.model.family == SingleTerm(1)
    assert [f.reject_null for f in rep.f_chain] == [True, False]
    assert rep.f_labels[1][0] == "sth(k=1)" and rep.f_labels[1][1].startswith("multi(")


def test_ladder_without_gates_on_short_series():
    t = np.arange(6.0)
    s = TimeSeries(t, predict(GrowthModel(SingleTerm(1), 0.5, 5.0, 2.0), t))
    rep = run_ladder(s, require_gates=False, k_range=[1, 2], allow_multi=False)
    assert rep.gate is None
    assert rep.chosen.model.family == SingleTerm(1)
