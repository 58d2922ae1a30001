"""Fitting growth models to time series and choosing how many hindering terms
the data supports.

A model maps the dimensionless shape onto data as
``Q(t) = Q_h * h(g_u * (t - t_h))``. Fits minimise the relative residual sum
of squares ``sum((Qhat_i / Q_i - 1)**2)``. ``Q_h`` enters as a pure scale
factor, so for any ``(g_u, t_h, weights)`` its optimum is closed-form and the
simplex search runs over the remaining parameters only.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import _simplex, kernel
from .errors import DomainError, GateFailure, LogisticDomain, OptimizerFailure, TooShort
from .kernel import (
    DEFAULT_SETTINGS,
    Exponential,
    GrowthFamily,
    HinderingWeights,
    Logistic,
    MultiTerm,
    SingleTerm,
    SolverSettings,
)
from .stats import (
    MK_MIN_POINTS,
    TimeSeries,
    TrendResult,
    f_test,
    growth_rates,
    mk_test,
    r2_fvu,
)

K_CAP = 12
N_STARTS = 8
_LOOSE_XATOL = 1e-4
_SCREEN_POINTS = 60
_TIGHT_XATOL = 1e-10
_CONVERGED_DIAMETER = 1e-9
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class GrowthModel:
    family: GrowthFamily
    g_u: float
    Q_h: float
    t_h: float

    def __post_init__(self):
        if isinstance(self.family, kernel.GompertzRef):
            raise kernel.UnsupportedFamily("Gompertz has no unhindered rate and cannot be a growth model")
        if not (self.g_u > 0 and math.isfinite(self.g_u)):
            raise DomainError("g_u must be positive and finite")
        if not (self.Q_h > 0 and math.isfinite(self.Q_h)):
            raise DomainError("Q_h must be positive and finite")
        if not math.isfinite(self.t_h):
            raise DomainError("t_h must be finite")

    def x(self, t):
        """Position ``x - x_h = g_u (t - t_h)`` relative to the hindering point."""
        return self.g_u * (np.asarray(t, dtype=np.float64) - self.t_h)

    def x_h(self, t0: float) -> float:
        """Shift of the hindering point from a time origin ``t0``."""
        return self.g_u * (self.t_h - t0)

    @property
    def n_params(self) -> int:
        return n_params(self.family)


@dataclass(frozen=True)
class FitResult:
    model: GrowthModel
    rss: float
    n: int
    n_params: int
    fvu: float
    fvu_log: float
    converged: bool
    restarts_used: int

    @property
    def label(self) -> str:
        return kernel.family_label(self.model.family)


@dataclass(frozen=True)
class GateResult:
    q_trend: TrendResult
    g_trend: Optional[TrendResult]
    alpha: float
    failed: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.failed


@dataclass
class LadderReport:
    gate: Optional[GateResult]
    candidates: list
    chosen: FitResult
    f_chain: list
    q_h_ratio: float
    #: (restricted, full) labels, one per entry of ``f_chain``
    f_labels: list = field(default_factory=list)


def n_params(family: GrowthFamily) -> int:
    if isinstance(family, Exponential):
        return 2
    if isinstance(family, (SingleTerm, Logistic)):
        return 3
    if isinstance(family, MultiTerm):
        return 3 + len(family.weights.terms) - 1
    raise kernel.UnsupportedFamily(kernel.family_label(family))


# ---------------------------------------------------------------------------
# model evaluation
# ---------------------------------------------------------------------------

def predict(model: GrowthModel, t, settings: SolverSettings = DEFAULT_SETTINGS):
    """Model value ``Q_h h(g_u (t - t_h))``; equals ``Q_h`` at ``t_h``."""
    x = model.x(t)
    if isinstance(model.family, Exponential):
        out = model.Q_h * np.exp(x)
    else:
        out = model.Q_h * np.asarray(kernel.h_of_x(model.family, x, settings))
    return float(out) if np.ndim(t) == 0 else out


def rss(model: GrowthModel, series: TimeSeries) -> float:
    """Relative residual sum of squares, every point weighted equally."""
    pred = predict(model, series.t)
    return float(np.sum((pred / series.Q - 1.0) ** 2))


def xh_shift(family: GrowthFamily, q_h: float) -> float:
    """``x_h = g_u (t_h - t_0)`` for a series whose first value is ``Q_h / q_h``."""
    if not q_h > 0:
        raise DomainError("q_h must be positive")
    if isinstance(family, Logistic):
        if q_h <= 0.5:
            raise LogisticDomain("the logistic needs q_h > 1/2")
        return math.log(2.0 * q_h - 1.0)
    if isinstance(family, SingleTerm):
        k = family.k
        return math.log(q_h) + (1.0 - q_h ** (-k)) / k
    # x_h = -x(Q_0 / Q_h) with the closed-form inverse
    return -kernel.x_of_h(family, 1.0 / q_h)


# ---------------------------------------------------------------------------
# gates
# ---------------------------------------------------------------------------

def check_growth_preconditions(series: TimeSeries, alpha: float = 0.05) -> GateResult:
    """Run the growth gate (Q increasing) and deceleration gate (g decreasing)."""
    if len(series) < MK_MIN_POINTS:
        raise TooShort(f"gates need at least {MK_MIN_POINTS} points, got {len(series)}")
    failed = []
    q_trend = mk_test(series, "increasing")
    if not q_trend.rejects(alpha):
        failed.append("q_increasing")
    rates = growth_rates(series)
    g_trend = None
    if len(rates) < MK_MIN_POINTS:
        failed.append("g_too_short")
    else:
        try:
            g_trend = mk_test(rates, "decreasing")
        except DomainError:
            failed.append("g_decreasing")
        else:
            if not g_trend.rejects(alpha):
                failed.append("g_decreasing")
    return GateResult(q_trend=q_trend, g_trend=g_trend, alpha=alpha, failed=tuple(failed))


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

class _Objective:
    """Profiled relative RSS over ``[ln g_u, (t_h - t_ref)/span, logits...]``.

    ``subsample`` keeps an evenly spaced subset of the points (first and
    last included) with the same parameter scaling, for cheap screening.
    """

    def __init__(self, series: TimeSeries, family: GrowthFamily, settings: SolverSettings,
                 subsample: Optional[int] = None):
        t = np.asarray(series.t)
        self.t_ref = 0.5 * (t[0] + t[-1])
        self.span = t[-1] - t[0]
        self.t0 = t[0]
        log_q = np.log(series.Q)
        if subsample is not None and subsample < t.size:
            idx = np.unique(np.round(np.linspace(0, t.size - 1, subsample)).astype(int))
            t, log_q = t[idx], log_q[idx]
        self.t = np.ascontiguousarray(t)
        self.log_q = np.ascontiguousarray(log_q)
        self.settings = settings
        self.family = family
        if isinstance(family, Exponential):
            self.kind, self.orders = _simplex.EXPONENTIAL, np.ones(1)
        elif isinstance(family, Logistic):
            self.kind, self.orders = _simplex.LOGISTIC, np.ones(1)
        elif isinstance(family, SingleTerm):
            self.kind, self.orders = _simplex.SERIES, np.array([float(family.k)])
        elif isinstance(family, MultiTerm):
            self.kind, self.orders = _simplex.SERIES, family.weights.orders.copy()
        else:
            raise kernel.UnsupportedFamily(kernel.family_label(family))

    def pack(self, g_u, t_h, weights=None):
        if self.kind == _simplex.EXPONENTIAL:
            return np.array([math.log(g_u)])
        p = [math.log(g_u), (t_h - self.t_ref) / self.span]
        if self.orders.size > 1:
            w = np.asarray(weights, dtype=np.float64)
            p.extend(np.clip(np.log(w[1:] / w[0]), -_simplex.LOGIT_CLIP, _simplex.LOGIT_CLIP))
        return np.array(p)

    def steps(self):
        if self.kind == _simplex.EXPONENTIAL:
            return np.array([0.2])
        return np.array([0.2, 0.1] + [1.0] * (self.orders.size - 1))

    def scale_and_rss(self, p):
        """``(ln Q_h, rss)`` at the optimal scale; rss is inf where not evaluable."""
        return _simplex.objective(np.asarray(p, dtype=np.float64), self.kind, self.t, self.log_q,
                                  self.t_ref, self.span, self.orders,
                                  self.settings.rel_tol, self.settings.max_iter)

    def __call__(self, p):
        return self.scale_and_rss(p)[1]

    def search(self, p0, steps, xatol, max_steps=5000):
        return _simplex.nelder_mead(np.asarray(p0, dtype=np.float64), np.asarray(steps, dtype=np.float64),
                                    self.kind, self.t, self.log_q, self.t_ref, self.span, self.orders,
                                    self.settings.rel_tol, self.settings.max_iter, xatol, max_steps)

    def model(self, p) -> GrowthModel:
        log_qh, _ = self.scale_and_rss(p)
        g_u, t_h, weights = _simplex.decode(np.asarray(p, dtype=np.float64), self.kind, self.t0,
                                            self.t_ref, self.span, self.orders.size)
        family = self.family
        if isinstance(family, MultiTerm):
            terms = {int(k): float(a) for k, a in zip(self.orders, weights)}
            # absorb rounding in the largest weight so the sum-to-one check passes
            top = max(terms, key=terms.get)
            terms[top] = 1.0 - math.fsum(a for k, a in terms.items() if k != top)
            family = MultiTerm(HinderingWeights(terms))
        return GrowthModel(family=family, g_u=float(g_u), Q_h=math.exp(log_qh), t_h=float(t_h))


def _polish(obj: _Objective, p):
    """Tight simplex search from ``p`` followed by one fresh restart."""
    p, f, ok, _ = obj.search(p, 0.1 * obj.steps(), _TIGHT_XATOL)
    p2, f2, ok2, diameter = obj.search(p, 0.01 * obj.steps(), _TIGHT_XATOL)
    if f2 <= f:
        p, f = p2, f2
    converged = bool(ok and ok2 and diameter < _CONVERGED_DIAMETER)
    return p, float(f), converged


def _finish(obj: _Objective, series: TimeSeries, p, value, converged, starts) -> FitResult:
    model = obj.model(p)
    pred = predict(model, series.t)
    try:
        _, fvu = r2_fvu(series, pred)
        _, fvu_log = r2_fvu(series, pred, log=True)
    except DomainError:
        fvu = fvu_log = math.nan
    return FitResult(model=model, rss=float(value), n=len(series), n_params=n_params(model.family),
                     fvu=fvu, fvu_log=fvu_log, converged=converged, restarts_used=starts)


def _screen(series, family, points, settings):
    """Loose searches from every start on a subsample; returns the best point."""
    obj = _Objective(series, family, settings, subsample=_SCREEN_POINTS)
    best_p, best_f, any_ok = None, math.inf, False
    for p0 in points:
        p, f, ok, _ = obj.search(p0, obj.steps(), _LOOSE_XATOL, 2000)
        any_ok = any_ok or ok
        if f < best_f:
            best_p, best_f = p, f
    if best_p is None or not math.isfinite(best_f):
        raise OptimizerFailure(f"no finite objective for {kernel.family_label(family)}")
    return best_p, best_f, any_ok


def _fit_from_points(series: TimeSeries, family, points, settings) -> FitResult:
    best_p, _, any_ok = _screen(series, family, points, settings)
    obj = _Objective(series, family, settings)
    p, f, converged = _polish(obj, best_p)
    if not (converged or any_ok) or not math.isfinite(f):
        raise OptimizerFailure(f"all restarts failed for {kernel.family_label(family)}")
    return _finish(obj, series, p, f, converged, len(points))


# ---------------------------------------------------------------------------
# starting points
# ---------------------------------------------------------------------------

def heuristic_start(series: TimeSeries) -> tuple[float, float]:
    """Initial ``(g_u, t_h)`` read off the smoothed growth-rate series.

    ``g_u`` is the largest rate in the first third of the series; ``t_h`` is
    where the smoothed rate first falls to half of it (the last time if it
    never does).
    """
    t = np.asarray(series.t)
    rates = growth_rates(series)
    g = np.asarray(rates.Q)
    tm = np.asarray(rates.t)
    w = max(1, len(g) // 10)
    if w > 1:
        kernel_w = np.ones(w) / w
        g = np.convolve(g, kernel_w, mode="valid")
        tm = np.convolve(tm, kernel_w, mode="valid")
    early = g[: max(1, len(g) // 3)]
    i_max = int(np.argmax(early))
    g0 = float(early[i_max])
    if not g0 > 0:
        g0 = float(np.log(series.Q[-1] / series.Q[0]) / (t[-1] - t[0]))
        if not g0 > 0:
            g0 = 1.0 / (t[-1] - t[0])
        return g0, float(t[-1])
    below = np.nonzero(g[i_max:] <= 0.5 * g0)[0]
    t_h0 = float(tm[i_max + below[0]]) if below.size else float(t[-1])
    return g0, t_h0


_START_GRID = ((1.0, 0.0), (2.0, 0.0), (0.5, 0.0), (4.0, 0.0),
               (1.0, 0.25), (1.0, -0.25), (2.0, 0.25), (2.0, -0.25))


def _heuristic_points(obj: _Objective, series: TimeSeries, weights, n_starts):
    g0, t_h0 = heuristic_start(series)
    span = obj.span
    points = []
    for g_mult, shift in _START_GRID[:n_starts]:
        points.append(obj.pack(g0 * g_mult, t_h0 + shift * span, weights))
    return points


def _initial_weights(family):
    if isinstance(family, MultiTerm):
        return family.weights.weights
    return None


def fit_family(series: TimeSeries, family: GrowthFamily, init=None, n_starts: int = N_STARTS,
               settings: SolverSettings = DEFAULT_SETTINGS) -> FitResult:
    """Least relative-RSS fit of one family.

    ``init`` may be a GrowthModel or a sequence of them; they replace the
    heuristic multi-start grid. For MultiTerm the orders are fixed and the
    weights are refitted, starting from the family's own weights.
    """
    obj = _Objective(series, family, settings)
    if init is None:
        points = _heuristic_points(obj, series, _initial_weights(family), n_starts)
    else:
        inits = [init] if isinstance(init, GrowthModel) else list(init)
        points = []
        for m in inits:
            w = _initial_weights(m.family) if isinstance(m.family, MultiTerm) else _initial_weights(family)
            if isinstance(family, MultiTerm) and (w is None or len(w) != obj.orders.size):
                w = _initial_weights(family)
            points.append(obj.pack(m.g_u, m.t_h, w))
    return _fit_from_points(series, family, points, settings)


# ---------------------------------------------------------------------------
# model selection
# ---------------------------------------------------------------------------

def _minimal_fits(series, k_range, include_logistic, n_starts, settings):
    sth = [fit_family(series, SingleTerm(k), n_starts=n_starts, settings=settings) for k in k_range]
    logistic = fit_family(series, Logistic(), n_starts=n_starts, settings=settings) if include_logistic else None
    return sth, logistic


def _choose_minimal(sth_fits, logistic):
    pool = list(sth_fits) + ([logistic] if logistic is not None else [])
    if not pool:
        raise DomainError("no candidate families to choose from")
    best = min(f.rss for f in pool)
    tied = [f for f in pool if f.rss <= best * (1.0 + _TIE_RTOL) + 1e-300]

    def key(f):
        fam = f.model.family
        return (0, fam.k) if isinstance(fam, SingleTerm) else (1, 0)

    return min(tied, key=key)


class MinimalSelection(NamedTuple):
    best_sth: Optional[FitResult]
    logistic: Optional[FitResult]
    chosen: FitResult


def select_minimal(series: TimeSeries, k_range: Iterable[int] = range(1, K_CAP + 1),
                   include_logistic: bool = True, n_starts: int = N_STARTS,
                   settings: SolverSettings = DEFAULT_SETTINGS) -> MinimalSelection:
    """Best single-term fit over ``k_range``, the logistic fit, and the winner.

    Ties on RSS go to the smaller order, then to single-term over logistic.
    """
    sth, logistic = _minimal_fits(series, list(k_range), include_logistic, n_starts, settings)
    best_sth = _choose_minimal(sth, None) if sth else None
    return MinimalSelection(best_sth, logistic, _choose_minimal(sth, logistic))


def _orders(fit: FitResult) -> tuple:
    fam = fit.model.family
    if isinstance(fam, SingleTerm):
        return (fam.k,)
    return tuple(fam.weights.terms)


def _seed_points(obj: _Objective, orders, seeds):
    """Starting points for a multi-term fit from lower-rung fits.

    Each seed fit contributes its ``(g_u, t_h)`` with most of the weight on
    the orders it already contains; the rest is spread over
    the new ones.
    """
    points = []
    for fit in seeds:
        m = fit.model
        have = dict(zip(*_weights_of(fit)))
        w = np.array([have.get(k, 0.0) for k in orders])
        missing = w == 0.0
        if missing.all():
            continue
        w = 0.9 * w / w.sum()
        w[missing] = 0.1 / missing.sum()
        points.append(obj.pack(m.g_u, m.t_h, w))
    if seeds:
        m = seeds[0].model
        points.append(obj.pack(m.g_u, m.t_h, np.full(len(orders), 1.0 / len(orders))))
    return points


def _weights_of(fit: FitResult):
    fam = fit.model.family
    if isinstance(fam, SingleTerm):
        return (fam.k,), (1.0,)
    return tuple(fam.weights.terms), tuple(fam.weights.terms.values())


def _best_rung(series, order_sets, seeds_for, settings, n_polish=3):
    """Screen every order set on a subsample, then polish the best few on all data."""
    screened = []
    for orders in order_sets:
        family = MultiTerm(HinderingWeights({k: 1.0 / len(orders) for k in orders}))
        probe = _Objective(series, family, settings)
        points = _seed_points(probe, orders, seeds_for(orders))
        try:
            p, f, _ = _screen(series, family, points, settings)
        except OptimizerFailure:
            continue
        screened.append((f, orders, family, p, len(points)))
    screened.sort(key=lambda item: (item[0], item[1]))
    polished = []
    for _, orders, family, p0, starts in screened[:n_polish]:
        obj = _Objective(series, family, settings)
        p, f, converged = _polish(obj, p0)
        if math.isfinite(f):
            polished.append(_finish(obj, series, p, f, converged, starts))
    if not polished:
        raise OptimizerFailure("no multi-term candidate could be fitted")
    return min(polished, key=lambda f: (f.rss, _orders(f)))


def extend_ladder(series: TimeSeries, base: FitResult, alpha: float = 0.05, max_terms: int = 3,
                  k_cap: int = K_CAP, sth_fits: Sequence[FitResult] = (), gate=None,
                  settings: SolverSettings = DEFAULT_SETTINGS) -> LadderReport:
    """Add hindering terms one at a time while the F-test finds them significant.

    The two-term rung searches every pair of orders up to ``k_cap``; later
    rungs extend the accepted set by one order. A logistic base ends the
    ladder immediately.
    """
    n = len(series)
    q_ratio = base.model.Q_h / float(series.Q[0])
    report = LadderReport(gate=gate, candidates=[base], chosen=base, f_chain=[], q_h_ratio=q_ratio)
    if not isinstance(base.model.family, SingleTerm):
        return report
    by_order = {f.model.family.k: f for f in sth_fits if isinstance(f.model.family, SingleTerm)}
    by_order.setdefault(base.model.family.k, base)
    current = base
    while len(_orders(current)) < max_terms:
        m = len(_orders(current)) + 1
        if m > k_cap:
            break
        if m == 2:
            order_sets = list(itertools.combinations(range(1, k_cap + 1), 2))
        else:
            have = _orders(current)
            order_sets = [tuple(sorted(have + (k,))) for k in range(1, k_cap + 1) if k not in have]

        def seeds_for(orders, current=current):
            seeds = [current] if set(_orders(current)) <= set(orders) else []
            seeds += [by_order[k] for k in orders if k in by_order and by_order[k] is not current]
            return seeds or [current]

        best = _best_rung(series, order_sets, seeds_for, settings)
        test = f_test(current.rss, best.rss, current.n_params, best.n_params, n, alpha)
        report.candidates.append(best)
        report.f_chain.append(test)
        report.f_labels.append((current.label, best.label))
        if not test.reject_null:
            break
        current = best
    report.chosen = current
    report.q_h_ratio = current.model.Q_h / float(series.Q[0])
    return report


def run_ladder(series: TimeSeries, alpha: float = 0.05, k_range: Iterable[int] = range(1, K_CAP + 1),
               max_terms: int = 3, include_logistic: bool = True, allow_multi: bool = True,
               require_gates: bool = True, k_cap: int = K_CAP, n_starts: int = N_STARTS,
               settings: SolverSettings = DEFAULT_SETTINGS) -> LadderReport:
    """Full selection pipeline: gates, exponential baseline, minimal model, ladder.

    Raises GateFailure when ``require_gates`` is set and either gate fails.
    """
    gate = None
    if len(series) >= MK_MIN_POINTS:
        gate = check_growth_preconditions(series, alpha)
    if require_gates:
        if gate is None:
            raise TooShort(f"gates need at least {MK_MIN_POINTS} points")
        if not gate.passed:
            raise GateFailure("series failed: " + ", ".join(gate.failed), gate=gate)
    k_list = list(k_range)
    exp_fit = fit_family(series, Exponential(), n_starts=n_starts, settings=settings)
    sth, logistic = _minimal_fits(series, k_list, include_logistic, n_starts, settings)
    minimal = _choose_minimal(sth, logistic)
    candidates = [exp_fit] + sth + ([logistic] if logistic is not None else [])
    first = f_test(exp_fit.rss, minimal.rss, exp_fit.n_params, minimal.n_params, len(series), alpha)
    report = LadderReport(gate=gate, candidates=candidates, chosen=minimal, f_chain=[first],
                          q_h_ratio=minimal.model.Q_h / float(series.Q[0]),
                          f_labels=[(exp_fit.label, minimal.label)])
    if not first.reject_null:
        report.chosen = exp_fit
        report.q_h_ratio = exp_fit.model.Q_h / float(series.Q[0])
        return report
    if allow_multi and max_terms >= 2 and isinstance(minimal.model.family, SingleTerm):
        ext = extend_ladder(series, minimal, alpha, max_terms, k_cap, sth, gate, settings)
        report.candidates.extend(ext.candidates[1:])
        report.f_chain.extend(ext.f_chain)
        report.f_labels.extend(ext.f_labels)
        report.chosen = ext.chosen
        report.q_h_ratio = ext.q_h_ratio
    return report


def refit_frozen(series: TimeSeries, model: GrowthModel) -> FitResult:
    """Score a fixed model against data without optimising anything."""
    pred = predict(model, series.t)
    _, fvu = r2_fvu(series, pred)
    _, fvu_log = r2_fvu(series, pred, log=True)
    return FitResult(model=model, rss=rss(model, series), n=len(series), n_params=model.n_params,
                     fvu=fvu, fvu_log=fvu_log, converged=True, restarts_used=0)
