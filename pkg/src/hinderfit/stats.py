"""Trend gates and goodness-of-fit statistics.

Mann-Kendall trend test (with tie and continuity corrections), log-difference
growth rates, the nested-model F-test and the special functions behind it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDof,
    DomainError,
    NonPositiveQ,
    TooShort,
    ValidationError,
    ZeroVariance,
)

MK_MIN_POINTS = 8


@dataclass(frozen=True)
class TimeSeries:
    """Observations ``(t_i, Q_i)`` with strictly increasing ``t``.

    ``Q`` must be positive unless ``positive=False``; rate series use that
    flag since their values may vanish or change sign, and may hold a
    single point.
    """

    t: np.ndarray
    Q: np.ndarray
    positive: bool = True

    def __post_init__(self):
        t = np.array(self.t, dtype=np.float64).ravel()
        Q = np.array(self.Q, dtype=np.float64).ravel()
        if t.shape != Q.shape:
            raise ValidationError("t and Q must have equal length")
        if t.size < (2 if self.positive else 1):
            raise TooShort("a series needs at least 2 points")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(Q))):
            raise ValidationError("series values must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("t must be strictly increasing")
        if self.positive and np.any(Q <= 0):
            raise NonPositiveQ("every Q must be positive")
        t.flags.writeable = False
        Q.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "Q", Q)

    def __len__(self):
        return self.t.size

    def scaled(self, factor: float) -> "TimeSeries":
        return TimeSeries(self.t, self.Q * factor, self.positive)

    def shifted(self, dt: float) -> "TimeSeries":
        return TimeSeries(self.t + dt, self.Q, self.positive)

    def head(self, n: int) -> "TimeSeries":
        return TimeSeries(self.t[:n], self.Q[:n], self.positive)


@dataclass(frozen=True)
class TrendResult:
    S: int
    var_S: float
    Z: float
    p_one_tailed: float
    direction: str
    n: int

    def rejects(self, alpha: float) -> bool:
        """True when the no-trend null is rejected in favour of ``direction``."""
        return self.p_one_tailed < alpha


@dataclass(frozen=True)
class FTestResult:
    F: float
    df1: int
    df2: int
    p_value: float
    reject_null: bool
    alpha: float

    @property
    def F_crit(self) -> float:
        """Critical value of F at ``alpha`` (the 1 - alpha quantile)."""
        return f_quantile(1.0 - self.alpha, self.df1, self.df2)


def _values(data):
    if isinstance(data, TimeSeries):
        return data.Q
    return np.asarray(data, dtype=np.float64).ravel()


# ---------------------------------------------------------------------------
# Mann-Kendall
# ---------------------------------------------------------------------------

def mk_s(series) -> int:
    """Mann-Kendall S: sum of sgn(Q_j - Q_i) over all pairs i < j."""
    q = _values(series)
    n = q.size
    if n < 2:
        raise TooShort("Mann-Kendall S needs at least 2 points")
    s = 0
    for i in range(n - 1):
        s += int(np.sign(q[i + 1:] - q[i]).sum())
    return s


def mk_test(series, direction: str = "increasing") -> TrendResult:
    """One-tailed Mann-Kendall trend test.

    ``direction`` names the alternative hypothesis. The variance of S is
    tie-corrected and Z carries the usual +-1 continuity correction.
    """
    if direction not in ("increasing", "decreasing"):
        raise DomainError(f"direction must be 'increasing' or 'decreasing', got {direction!r}")
    q = _values(series)
    n = q.size
    if n < MK_MIN_POINTS:
        raise TooShort(f"Mann-Kendall test needs at least {MK_MIN_POINTS} points, got {n}")
    s = mk_s(q)
    _, counts = np.unique(q, return_counts=True)
    ties = counts[counts > 1].astype(np.float64)
    var_s = (n * (n - 1) * (2 * n + 5) - np.sum(ties * (ties - 1) * (2 * ties + 5))) / 18.0
    if var_s <= 0:
        raise ZeroVariance("all values are tied; S has zero variance")
    if s > 0:
        z = (s - 1) / math.sqrt(var_s)
    elif s < 0:
        z = (s + 1) / math.sqrt(var_s)
    else:
        z = 0.0
    p = normal_sf(z) if direction == "increasing" else normal_cdf(z)
    return TrendResult(S=s, var_S=float(var_s), Z=float(z), p_one_tailed=float(p),
                       direction=direction, n=n)


def growth_rates(series: TimeSeries) -> TimeSeries:
    """Log-difference growth rates assigned to interval midpoints.

    Exact for an exponential at any spacing.
    """
    q = np.asarray(series.Q)
    if np.any(q <= 0):
        raise NonPositiveQ("growth rates need positive Q")
    t = np.asarray(series.t)
    g = np.diff(np.log(q)) / np.diff(t)
    mid = 0.5 * (t[1:] + t[:-1])
    return TimeSeries(mid, g, positive=False)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _beta_cf(a, b, x, max_iter=20000, eps=1e-16):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise DomainError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_beta_prefactor(a, b, x, y):
    # y = 1 - x, passed separately so callers can keep it exact
    return (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
            + a * math.log(x) + b * math.log(y))


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """``I_x(a, b)`` by continued fraction, switching to ``1 - I_{1-x}(b, a)``
    when ``x > (a + 1) / (a + b + 2)``."""
    if not (a > 0 and b > 0):
        raise DomainError("incomplete beta needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise DomainError("incomplete beta needs 0 <= x <= 1")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(_log_beta_prefactor(a, b, x, 1.0 - x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _incomplete_beta_upper(a, b, x, y):
    """``1 - I_x(a, b)`` given ``y = 1 - x``, without cancellation in the tail."""
    if x == 0.0:
        return 1.0
    if y == 0.0:
        return 0.0
    front = math.exp(_log_beta_prefactor(b, a, y, x))
    if y < (b + 1.0) / (a + b + 2.0):
        return front * _beta_cf(b, a, y) / b
    return 1.0 - front * _beta_cf(a, b, x) / a


def f_cdf(F: float, df1: int, df2: int) -> float:
    """CDF of the F distribution with ``(df1, df2)`` degrees of freedom."""
    if df1 <= 0 or df2 <= 0:
        raise DomainError("degrees of freedom must be positive")
    if F < 0 or math.isnan(F):
        raise DomainError("F must be non-negative")
    if math.isinf(F):
        return 1.0
    return regularized_incomplete_beta(df1 / 2.0, df2 / 2.0, df1 * F / (df1 * F + df2))


def f_sf(F: float, df1: int, df2: int) -> float:
    """Upper tail ``1 - f_cdf``, accurate for tiny p-values."""
    if df1 <= 0 or df2 <= 0:
        raise DomainError("degrees of freedom must be positive")
    if F < 0 or math.isnan(F):
        raise DomainError("F must be non-negative")
    if math.isinf(F):
        return 0.0
    den = df1 * F + df2
    return _incomplete_beta_upper(df1 / 2.0, df2 / 2.0, df1 * F / den, df2 / den)


def f_quantile(p: float, df1: int, df2: int) -> float:
    """Inverse of ``f_cdf`` by bracketing bisection."""
    if not 0.0 < p < 1.0:
        raise DomainError("quantile level must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    while f_cdf(hi, df1, df2) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f_cdf(mid, df1, df2) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# model comparison
# ---------------------------------------------------------------------------

def f_test(rss_restricted: float, rss_full: float, p_restricted: int, p_full: int,
           n: int, alpha: float = 0.05) -> FTestResult:
    """Nested-model F-test of a full model against its restricted form."""
    if p_full <= p_restricted:
        raise DomainError("the full model must have more parameters than the restricted one")
    if n <= p_full:
        raise DegenerateDof(f"n = {n} leaves no residual degrees of freedom for {p_full} parameters")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    df1 = p_full - p_restricted
    df2 = n - p_full
    gain = max(rss_restricted - rss_full, 0.0)
    if gain == 0.0:
        F = 0.0
    elif rss_full <= 0.0:
        F = math.inf
    else:
        F = (gain / df1) / (rss_full / df2)
    p = f_sf(F, df1, df2)
    return FTestResult(F=F, df1=df1, df2=df2, p_value=p, reject_null=p < alpha, alpha=alpha)


def r2_fvu(data, predictions, log: bool = False) -> tuple[float, float]:
    """Coefficient of determination and fraction of variance unexplained.

    With ``log=True`` the same formulas are applied to ``ln Q``.
    """
    q = _values(data)
    pred = np.asarray(predictions, dtype=np.float64).ravel()
    if q.shape != pred.shape:
        raise ValidationError("data and predictions must have equal length")
    if q.size < 2:
        raise TooShort("need at least 2 points")
    if log:
        q, pred = np.log(q), np.log(pred)
    ss_tot = float(np.sum((q - q.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroVariance("data has zero variance")
    fvu = float(np.sum((q - pred) ** 2)) / ss_tot
    return 1.0 - fvu, fvu
