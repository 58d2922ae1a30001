"""Forward use of fitted models and the accelerated-growth diagnostics.

Everything here is a pure function of its arguments. ``integrate_growth``
is a plain fixed-step RK4 kept deliberately independent of the implicit
solver, so closed forms can be checked against it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernel
from .errors import AlphaTooSmall, DomainError, NonPositiveRate, SingularityReached, StepOverflow
from .fitting import GrowthModel, predict
from .kernel import Exponential, Logistic

_LN2 = math.log(2.0)
# step-to-step growth that counts as running into a singularity
_MAX_STEP_RATIO = 10.0


@dataclass(frozen=True)
class Forecast:
    t: np.ndarray
    Q: np.ndarray
    g: np.ndarray
    x_minus_xh: np.ndarray


def _same_shape(values, like):
    return float(values) if np.ndim(like) == 0 else np.asarray(values)


def forecast(model: GrowthModel, t) -> Forecast:
    """Model value and growth rate at the times ``t`` (scalar or array)."""
    ta = np.asarray(t, dtype=np.float64)
    Q = np.asarray(predict(model, ta))
    g = model.g_u * np.asarray(kernel.growth_rate_factor(model.family, Q / model.Q_h))
    return Forecast(t=_same_shape(ta, t), Q=_same_shape(Q, t), g=_same_shape(g, t),
                    x_minus_xh=_same_shape(model.x(ta), t))


def doubling_time(g_u: float) -> float:
    if not (g_u > 0 and math.isfinite(g_u)):
        raise NonPositiveRate("doubling time needs a positive rate")
    return _LN2 / g_u


def carrying_capacity(model: GrowthModel) -> Optional[float]:
    """``2 Q_h`` for the logistic; None for families that grow without bound."""
    if isinstance(model.family, Logistic):
        return 2.0 * model.Q_h
    return None


def rate_slope(model: GrowthModel, Q):
    """Analytic ``dg/dQ`` of a fitted model at the value ``Q``."""
    Qa = np.asarray(Q, dtype=np.float64)
    if np.any(~(Qa > 0)):
        raise DomainError("Q must be positive")
    if isinstance(model.family, Exponential):
        return _same_shape(np.zeros_like(Qa), Q)
    if isinstance(model.family, Logistic):
        # g = g_u (1 - Q / 2 Q_h) is linear in Q
        kernel.growth_rate_factor(model.family, Qa / model.Q_h)
        return _same_shape(np.full_like(Qa, -0.5 * model.g_u / model.Q_h), Q)
    h = Qa / model.Q_h
    f = np.asarray(kernel.f_transform(model.family, h))
    fp = np.asarray(kernel.f_prime(model.family, h))
    return _same_shape(-model.g_u * fp / (1.0 + f) ** 2 / model.Q_h, Q)


def stability_exponent(g: float, dg_dQ: float, Q: float) -> float:
    """Growth rate of a small relative perturbation: ``g + Q dg/dQ``.

    Negative means the perturbation decays; positive means it runs away.
    """
    if not Q > 0:
        raise DomainError("Q must be positive")
    return g + Q * dg_dQ


# ---------------------------------------------------------------------------
# accelerated growth
# ---------------------------------------------------------------------------

def accel_logistic(K: float, x):
    """``K e^x / (2 - e^x)``: solution of ``g = g_u (1 + Q/K)`` with ``Q(0) = K``."""
    if not K > 0:
        raise DomainError("K must be positive")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(~(xa < _LN2)):
        raise SingularityReached("accelerated logistic diverges at x = ln 2")
    ex = np.exp(xa)
    return _same_shape(K * ex / (2.0 - ex), x)


@dataclass(frozen=True)
class AccelQuadratic:
    """Rate ``g_u / (1 - Q/K + alpha_q (Q/K)^2)``, positive when ``alpha_q > 1/4``."""

    g_u: float
    K: float
    alpha_q: float

    def __post_init__(self):
        if not self.alpha_q > 0.25:
            raise AlphaTooSmall("alpha_q must exceed 1/4 for a positive rate")
        if not self.g_u > 0:
            raise NonPositiveRate("g_u must be positive")
        if not self.K > 0:
            raise DomainError("K must be positive")

    def peak(self) -> tuple[float, float]:
        return accel_quadratic_peak(self)


def accel_quadratic_rate(m: AccelQuadratic, Q):
    Qa = np.asarray(Q, dtype=np.float64)
    if np.any(~(Qa >= 0)):
        raise DomainError("Q must be non-negative")
    r = Qa / m.K
    return _same_shape(m.g_u / (1.0 - r + m.alpha_q * r * r), Q)


def accel_quadratic_peak(m: AccelQuadratic) -> tuple[float, float]:
    """``(Q_peak, g_peak) = (K / 2 alpha, alpha g_u / (alpha - 1/4))``."""
    return m.K / (2.0 * m.alpha_q), m.alpha_q * m.g_u / (m.alpha_q - 0.25)


# ---------------------------------------------------------------------------
# reference integrator
# ---------------------------------------------------------------------------

def integrate_growth(rate_of_Q: Callable[[float], float], Q0: float, t_span, step: float):
    """Classical RK4 on ``dQ/dt = g(Q) Q`` with a fixed step.

    The step is shrunk so a whole number of steps covers ``t_span``. Returns
    ``(t, Q)`` arrays. Raises StepOverflow when Q stops being finite or grows
    more than tenfold in one step.
    """
    if not Q0 > 0:
        raise DomainError("Q0 must be positive")
    t0, t1 = (float(v) for v in t_span)
    if not (step > 0 and t1 > t0):
        raise DomainError("need step > 0 and t_span[1] > t_span[0]")
    n = max(1, math.ceil((t1 - t0) / step - 1e-9))
    dt = (t1 - t0) / n

    def deriv(q):
        return rate_of_Q(q) * q

    t = t0 + dt * np.arange(n + 1)
    t[-1] = t1
    Q = np.empty(n + 1)
    Q[0] = q = float(Q0)
    for i in range(n):
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = deriv(q)
            k2 = deriv(q + 0.5 * dt * k1)
            k3 = deriv(q + 0.5 * dt * k2)
            k4 = deriv(q + dt * k3)
            nxt = q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(nxt) or nxt <= 0 or nxt > _MAX_STEP_RATIO * q:
            raise StepOverflow(f"trajectory blew up near t = {t[i]:.6g}")
        Q[i + 1] = q = float(nxt)
    return t, Q
