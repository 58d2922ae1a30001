"""Dimensionless growth functions.

A decelerated growth process is written as ``Q(t) = Q_h * h(g_u * (t - t_h))``
where the hindering function ``h`` solves

    ln h + sum_k (a_k / k) * (h**k - 1) = x,      sum_k a_k = 1,

with ``h(0) = 1`` and ``h'(0) = 1/2``. This module evaluates ``h`` and the
quantities derived from it (growth-rate factor, f-transform, derivatives,
asymmetry, asymptotes) for every supported family. All functions are pure and
accept scalars or numpy arrays; scalar input gives a float back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numba
import numpy as np
from scipy import optimize, special

from .errors import (
    DomainError,
    LogisticOutOfRange,
    NoConvergence,
    NonPositiveH,
    NonPositiveQh,
    NoPeak,
    OverflowGuard,
    UnsupportedFamily,
)

K_CAP = 16
_WEIGHT_SUM_TOL = 1e-12
# exp() overflows just above 709.78
_MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class HinderingWeights:
    """Weights ``a_k`` of the hindering series, keyed by order ``k``.

    Orders are capped at ``max_order`` (16 unless raised explicitly).
    """

    terms: Mapping[int, float]
    max_order: int = field(default=K_CAP, compare=False, repr=False)
    orders: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        items = sorted((int(k), float(a)) for k, a in dict(self.terms).items())
        if not items:
            raise DomainError("at least one hindering term is required")
        for k, a in items:
            if not 1 <= k <= self.max_order:
                raise DomainError(f"order {k} outside [1, {self.max_order}]")
            if not a > 0 or not math.isfinite(a):
                raise DomainError(f"weight a_{k} = {a} must be positive")
        total = math.fsum(a for _, a in items)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise DomainError(f"weights sum to {total!r}, expected 1")
        object.__setattr__(self, "terms", dict(items))
        object.__setattr__(self, "orders", np.array([k for k, _ in items], dtype=np.float64))
        object.__setattr__(self, "weights", np.array([a for _, a in items], dtype=np.float64))

    @classmethod
    def normalized(cls, terms: Mapping[int, float], max_order: int = K_CAP) -> "HinderingWeights":
        """Build weights after rescaling ``terms`` to sum to one."""
        total = math.fsum(terms.values())
        return cls({k: a / total for k, a in terms.items()}, max_order=max_order)

    def __hash__(self):
        return hash(tuple(self.terms.items()))


@dataclass(frozen=True)
class Exponential:
    """Unhindered growth, ``h = e**x`` (the formal k -> 0 member)."""


@dataclass(frozen=True)
class SingleTerm:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or not 1 <= self.k <= K_CAP:
            raise DomainError(f"single-term order must be an integer in [1, {K_CAP}], got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def weights(self) -> HinderingWeights:
        return HinderingWeights({self.k: 1.0})


@dataclass(frozen=True)
class MultiTerm:
    weights: HinderingWeights

    def __post_init__(self):
        if not isinstance(self.weights, HinderingWeights):
            object.__setattr__(self, "weights", HinderingWeights(self.weights))


@dataclass(frozen=True)
class Logistic:
    """``h = 2 / (1 + e**-x)``, bounded by 2."""


@dataclass(frozen=True)
class GompertzRef:
    """Gompertz reference curve ``K exp(-b exp(-t/tau))``.

    Only usable through the ``gompertz_*`` helpers: its growth rate diverges
    as Q -> 0, so it has no unhindered rate and no hindering function.
    """

    b: float
    tau: float
    K: float

    def __post_init__(self):
        if not (self.b > 0 and self.tau > 0 and self.K > 0):
            raise DomainError("Gompertz b, tau and K must be positive")


GrowthFamily = Union[Exponential, SingleTerm, MultiTerm, Logistic, GompertzRef]


@dataclass(frozen=True)
class SolverSettings:
    rel_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


DEFAULT_SETTINGS = SolverSettings()


def family_label(family: GrowthFamily) -> str:
    if isinstance(family, Exponential):
        return "exponential"
    if isinstance(family, SingleTerm):
        return f"sth(k={family.k})"
    if isinstance(family, MultiTerm):
        return "multi(k=[" + ", ".join(str(k) for k in family.weights.terms) + "])"
    if isinstance(family, Logistic):
        return "logistic"
    return "gompertz"


def series_of(family: GrowthFamily):
    """Return ``(orders, weights)`` float arrays for a hindering family, else None."""
    if isinstance(family, SingleTerm):
        return np.array([float(family.k)]), np.array([1.0])
    if isinstance(family, MultiTerm):
        return family.weights.orders, family.weights.weights
    if isinstance(family, (Exponential, Logistic)):
        return None
    raise UnsupportedFamily(f"{family_label(family)} has no hindering function")


def _scalar_or_array(values, like):
    return float(values) if np.ndim(like) == 0 else values


def _check_h(family, h, upper_inclusive):
    h = np.asarray(h, dtype=np.float64)
    if np.any(~(h > 0)):
        raise NonPositiveH("h must be positive")
    if isinstance(family, Logistic):
        bad = h > 2 if upper_inclusive else h >= 2
        if np.any(bad):
            raise LogisticOutOfRange("logistic h must lie below its bound of 2")
    return h


def _log_h_powers(orders, log_h):
    kl = np.multiply.outer(log_h, orders)
    if np.any(kl > _MAX_EXPONENT):
        raise OverflowGuard("h**k exceeds the representable range")
    return kl


# ---------------------------------------------------------------------------
# forward map h -> x and its companions
# ---------------------------------------------------------------------------

def x_of_h(family: GrowthFamily, h):
    """Invert the hindering function: the x at which ``h(x)`` equals ``h``."""
    arr = _check_h(family, h, upper_inclusive=False)
    if isinstance(family, Logistic):
        out = -np.log(2.0 / arr - 1.0)
        return _scalar_or_array(out, h)
    series = series_of(family)
    log_h = np.log(arr)
    if series is None:
        return _scalar_or_array(log_h, h)
    orders, weights = series
    kl = _log_h_powers(orders, log_h)
    out = log_h + np.sum(weights / orders * np.expm1(kl), axis=-1)
    return _scalar_or_array(out, h)


def f_transform(family: GrowthFamily, h):
    """``f`` in ``g = g_u / (1 + f)``, as a function of ``h = Q / Q_h``."""
    arr = _check_h(family, h, upper_inclusive=False)
    if isinstance(family, Logistic):
        out = arr / (2.0 - arr)
        return _scalar_or_array(out, h)
    series = series_of(family)
    if series is None:
        return _scalar_or_array(np.zeros_like(arr), h)
    orders, weights = series
    kl = _log_h_powers(orders, np.log(arr))
    out = np.sum(weights * np.exp(kl), axis=-1)
    return _scalar_or_array(out, h)


def growth_rate_factor(family: GrowthFamily, h):
    """Ratio ``g / g_u`` at ``h``; equals 1/2 at the hindering point."""
    arr = _check_h(family, h, upper_inclusive=True)
    if isinstance(family, Logistic):
        return _scalar_or_array(1.0 - 0.5 * arr, h)
    return _scalar_or_array(1.0 / (1.0 + np.asarray(f_transform(family, arr))), h)


def dh_dx(family: GrowthFamily, h):
    """Derivative of the hindering function expressed through its value."""
    arr = _check_h(family, h, upper_inclusive=True)
    return _scalar_or_array(arr * np.asarray(growth_rate_factor(family, arr)), h)


def f_prime(family: GrowthFamily, h):
    """Derivative ``df/dh``; used for analytic rate slopes."""
    arr = _check_h(family, h, upper_inclusive=False)
    if isinstance(family, Logistic):
        return _scalar_or_array(2.0 / (2.0 - arr) ** 2, h)
    series = series_of(family)
    if series is None:
        return _scalar_or_array(np.zeros_like(arr), h)
    orders, weights = series
    kl = _log_h_powers(orders, np.log(arr))
    out = np.sum(weights * orders * np.exp(kl - np.log(arr)[..., None]), axis=-1)
    return _scalar_or_array(out, h)


def alpha_coefficients(weights: HinderingWeights, Q_h: float) -> dict[int, float]:
    """Dimensional series coefficients ``alpha_k = a_k / Q_h**k``."""
    if not Q_h > 0:
        raise NonPositiveQh("Q_h must be positive")
    return {k: a / Q_h**k for k, a in weights.terms.items()}


# ---------------------------------------------------------------------------
# inverse map x -> h
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _solve_one(xi, orders, weights, shift, guess, rel_tol, max_iter):
    """Safeguarded Newton for u = ln h at a single x.

    F(u) = u + sum (a_k/k) expm1(k u) - x is increasing and convex, and the
    root always lies in [min(x, 0), max(x, 0)]; for x > 0 each single term
    also bounds it by log1p(k x / a_k) / k, which keeps every exp() finite.
    Returns (u, dF/du at u, converged).
    """
    m = orders.shape[0]
    if xi == 0.0:
        return 0.0, 1.0 + np.sum(weights), True
    if xi > 0.0:
        lo = 0.0
        hi = xi
        for j in range(m):
            b = math.log1p(orders[j] * xi / weights[j]) / orders[j]
            if b < hi:
                hi = b
    else:
        lo = xi
        hi = min(0.0, xi + shift)
    u = guess if lo < guess < hi else hi
    k_max = 0.0
    for j in range(m):
        if orders[j] > k_max:
            k_max = orders[j]
    dF = 1.0
    for _ in range(max_iter):
        F = u - xi
        dF = 1.0
        for j in range(m):
            ku = orders[j] * u
            e = math.exp(ku)
            F += weights[j] / orders[j] * (math.expm1(ku) if abs(ku) < 0.5 else e - 1.0)
            dF += weights[j] * e
        if F == 0.0:
            return u, dF, True
        if F > 0.0:
            hi = u
        else:
            lo = u
        step = F / dF
        un = u - step
        if not (lo <= un <= hi):
            un = 0.5 * (lo + hi)
            step = u - un
        scale = rel_tol * max(1.0, abs(un))
        # Newton error after this step is below (F''/2F') step**2 <= k_max/2 step**2
        if abs(step) <= scale or 0.5 * k_max * step * step <= 0.1 * scale:
            return un, dF, True
        u = un
    return u, dF, False


@numba.njit(cache=True)
def _solve_log_h(x, orders, weights, rel_tol, max_iter):
    """Vector of u = ln h(x); returns (u, number of points that hit max_iter).

    Each point is started from a first-order prediction off its predecessor,
    which is close whenever x arrives in sorted order (as for time series).
    """
    n = x.shape[0]
    u_out = np.empty(n)
    failed = 0
    shift = 0.0
    for j in range(orders.shape[0]):
        shift += weights[j] / orders[j]
    guess = math.nan
    for i in range(n):
        u, dF, ok = _solve_one(x[i], orders, weights, shift, guess, rel_tol, max_iter)
        if not ok:
            failed += 1
        u_out[i] = u
        if i + 1 < n:
            guess = u + (x[i + 1] - x[i]) / dF
    return u_out, failed


@numba.njit(cache=True)
def _profiled_rss_series(t, log_q, g_u, t_h, orders, weights, rel_tol, max_iter):
    """Relative RSS with the optimal scale; returns (ln scale, rss, ok)."""
    x = g_u * (t - t_h)
    u, failed = _solve_log_h(x, orders, weights, rel_tol, max_iter)
    if failed:
        return math.nan, math.inf, False
    return _profile(u - log_q)


@numba.njit(cache=True)
def _profile(lr):
    n = lr.shape[0]
    top = -math.inf
    for i in range(n):
        if not math.isfinite(lr[i]):
            return math.nan, math.inf, False
        if lr[i] > top:
            top = lr[i]
    s1 = 0.0
    s2 = 0.0
    for i in range(n):
        r = math.exp(lr[i] - top)
        s1 += r
        s2 += r * r
    c = s1 / s2
    rss = 0.0
    for i in range(n):
        d = c * math.exp(lr[i] - top) - 1.0
        rss += d * d
    return math.log(c) - top, rss, True


def log_h_of_x(family: GrowthFamily, x, settings: SolverSettings = DEFAULT_SETTINGS):
    """``ln h(x)``; stays finite where ``h`` itself would under/overflow."""
    xa = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(xa)):
        raise DomainError("x must be finite")
    if isinstance(family, Logistic):
        out = math.log(2.0) + special.log_expit(xa)
        return _scalar_or_array(out, x)
    series = series_of(family)
    if series is None:
        return _scalar_or_array(xa.copy(), x)
    orders, weights = series
    flat = np.ascontiguousarray(xa.ravel())
    u, failed = _solve_log_h(flat, orders, weights, settings.rel_tol, settings.max_iter)
    if failed:
        raise NoConvergence(f"{failed} point(s) did not converge in {settings.max_iter} iterations")
    return _scalar_or_array(u.reshape(xa.shape), x)


def h_of_x(family: GrowthFamily, x, settings: SolverSettings = DEFAULT_SETTINGS):
    """The hindering function ``h(x)``, with ``h(0) = 1``."""
    xa = np.asarray(x, dtype=np.float64)
    if isinstance(family, Logistic):
        if not np.all(np.isfinite(xa)):
            raise DomainError("x must be finite")
        return _scalar_or_array(2.0 * special.expit(xa), x)
    return _scalar_or_array(np.exp(np.asarray(log_h_of_x(family, xa, settings))), x)


# ---------------------------------------------------------------------------
# shape diagnostics
# ---------------------------------------------------------------------------

def asymmetry(family: GrowthFamily, x, settings: SolverSettings = DEFAULT_SETTINGS):
    """Departure from the logistic's point symmetry about (0, 1).

    ``(h(x) - 1) / (1 - h(-x)) - 1``; returns 0 at x = 0, the limit of the
    0/0 form since both branches leave h = 1 with slope 1/2.
    """
    xa = np.asarray(x, dtype=np.float64)
    if isinstance(family, Logistic):
        # exact identity; the ratio form loses digits near x = 0
        return _scalar_or_array(np.zeros_like(xa), x)
    up = np.asarray(h_of_x(family, xa, settings))
    down = np.asarray(h_of_x(family, -xa, settings))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (up - 1.0) / (1.0 - down) - 1.0
    out = np.where(xa == 0.0, 0.0, out)
    return _scalar_or_array(out, x)


def asymptotic(family: GrowthFamily, x, side: str):
    """Leading-order approximation of ``h`` deep in one growth domain.

    ``side`` is ``"unhindered"`` (x << 0) or ``"hindered"`` (x >> 0).
    """
    xa = np.asarray(x, dtype=np.float64)
    if side not in ("unhindered", "hindered"):
        raise DomainError(f"side must be 'unhindered' or 'hindered', got {side!r}")
    if isinstance(family, SingleTerm):
        k = family.k
        if side == "unhindered":
            out = np.exp(xa + 1.0 / k)
        else:
            out = (1.0 + k * xa) ** (1.0 / k)
    elif isinstance(family, Logistic):
        out = 2.0 * np.exp(xa) if side == "unhindered" else 2.0 * -np.expm1(-xa)
    else:
        raise UnsupportedFamily(f"no asymptotic form for {family_label(family)}")
    return _scalar_or_array(out, x)


def derivative_peak(k: int) -> tuple[float, float]:
    """Location and height of the maximum of ``dh/dx`` for single-term order k."""
    if k == 1:
        raise NoPeak("dh/dx of the k=1 function rises monotonically toward 1")
    if k < 1:
        raise DomainError("order must be >= 1")
    x_peak = -(math.log(k - 1) + (k - 2) / (k - 1)) / k
    value = k ** (-1.0 / k) * (1.0 - 1.0 / k) ** (1.0 - 1.0 / k)
    return x_peak, value


LOGISTIC_PEAK = (0.0, 0.5)


def numerical_derivative_peak(family: GrowthFamily, bracket=(-5.0, 5.0),
                              settings: SolverSettings = DEFAULT_SETTINGS):
    """Locate the maximum of ``dh/dx`` numerically.

    A bounded scalar search brackets the maximum; the location is then
    refined as the zero of the second derivative, whose sign follows
    ``1 + f(h) - h f'(h)``.
    """
    def neg_slope(x):
        return -dh_dx(family, h_of_x(family, x, settings))

    coarse = optimize.minimize_scalar(neg_slope, bounds=bracket, method="bounded",
                                      options={"xatol": 1e-8})
    x0 = coarse.x

    def curvature_sign(x):
        h = h_of_x(family, x, settings)
        return 1.0 + f_transform(family, h) - h * f_prime(family, h)

    lo, hi = x0 - 0.05, x0 + 0.05
    if curvature_sign(lo) * curvature_sign(hi) > 0:
        raise NoPeak(f"dh/dx has no interior maximum for {family_label(family)}")
    x_peak = optimize.brentq(curvature_sign, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return x_peak, dh_dx(family, h_of_x(family, x_peak, settings))


# ---------------------------------------------------------------------------
# Gompertz reference curve
# ---------------------------------------------------------------------------

def gompertz_eval(b, tau, K, t):
    if not (b > 0 and tau > 0 and K > 0):
        raise DomainError("Gompertz b, tau and K must be positive")
    ta = np.asarray(t, dtype=np.float64)
    return _scalar_or_array(K * np.exp(-b * np.exp(-ta / tau)), t)


def gompertz_rate_of_Q(tau, K, Q):
    """Gompertz growth rate ``ln(K/Q) / tau``; diverges as Q -> 0."""
    Qa = np.asarray(Q, dtype=np.float64)
    if not (tau > 0 and K > 0):
        raise DomainError("Gompertz tau and K must be positive")
    if np.any(~(Qa > 0)) or np.any(Qa > K):
        raise DomainError("Gompertz rate needs 0 < Q <= K")
    return _scalar_or_array(np.log(K / Qa) / tau, Q)


def gompertz_rate_of_t(b, tau, t):
    if not (b > 0 and tau > 0):
        raise DomainError("Gompertz b and tau must be positive")
    ta = np.asarray(t, dtype=np.float64)
    return _scalar_or_array(b / tau * np.exp(-ta / tau), t)
