"""Report documents, their byte-stable JSON form, and plotting curves.

Floats are written with 17 significant digits and object keys are sorted,
so a report built twice from the same input is byte-identical. NaN and
infinities have no JSON spelling and are written as ``null``.
"""
from __future__ import annotations

import json
import math
from typing import Optional

import numpy as np

from . import kernel
from .datasets import Dataset, format_float
from .errors import DomainError, ValidationError
from .fitting import FitResult, GrowthModel, LadderReport, xh_shift
from .forecast import carrying_capacity, doubling_time, forecast
from .kernel import Exponential, HinderingWeights, Logistic, MultiTerm, SingleTerm
from .stats import FTestResult, TrendResult

SCHEMA = "hinderfit/1"
# forecast horizons past the last observation, as fractions of the data span
FORECAST_HORIZONS = (0.0, 0.25, 0.5, 1.0)


# ---------------------------------------------------------------------------
# deterministic JSON
# ---------------------------------------------------------------------------

def _encode(obj, out):
    if obj is None or obj is True or obj is False:
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            out.append("null")
        else:
            s = format_float(v)
            out.append(s if any(c in s for c in ".en") else s + ".0")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> bytes:
    out = []
    _encode(obj, out)
    return ("".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# family and model encoding
# ---------------------------------------------------------------------------

def family_to_dict(family) -> dict:
    if isinstance(family, Exponential):
        return {"kind": "exponential"}
    if isinstance(family, SingleTerm):
        return {"kind": "sth", "k": family.k}
    if isinstance(family, Logistic):
        return {"kind": "logistic"}
    if isinstance(family, MultiTerm):
        return {"kind": "multi", "weights": {str(k): a for k, a in family.weights.terms.items()}}
    raise kernel.UnsupportedFamily(kernel.family_label(family))


def family_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "exponential":
        return Exponential()
    if kind == "sth":
        return SingleTerm(int(d["k"]))
    if kind == "logistic":
        return Logistic()
    if kind == "multi":
        return MultiTerm(HinderingWeights({int(k): float(a) for k, a in d["weights"].items()}))
    raise ValidationError(f"unknown family kind {kind!r}")


def model_to_dict(model: GrowthModel) -> dict:
    return {"family": family_to_dict(model.family), "g_u": model.g_u, "Q_h": model.Q_h, "t_h": model.t_h}


def model_from_dict(d: dict) -> GrowthModel:
    try:
        return GrowthModel(family=family_from_dict(d["family"]), g_u=float(d["g_u"]),
                           Q_h=float(d["Q_h"]), t_h=float(d["t_h"]))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValidationError(f"malformed model entry: {exc}") from None


# ---------------------------------------------------------------------------
# report document
# ---------------------------------------------------------------------------

def _trend(tr: Optional[TrendResult]):
    if tr is None:
        return None
    return {"S": tr.S, "var_S": tr.var_S, "Z": tr.Z, "p_one_tailed": tr.p_one_tailed,
            "direction": tr.direction, "n": tr.n}


def _candidate(fit: FitResult, t_first: float, t_last: float) -> dict:
    m = fit.model
    return {
        "label": fit.label,
        **model_to_dict(m),
        "x_range": [float(m.x(t_first)), float(m.x(t_last))],
        "rss": fit.rss, "fvu": fit.fvu, "fvu_log": fit.fvu_log,
        "n_params": fit.n_params, "converged": fit.converged, "restarts_used": fit.restarts_used,
    }


def _f_entry(test: FTestResult, labels) -> dict:
    return {"restricted": labels[0], "full": labels[1], "F": test.F, "df1": test.df1,
            "df2": test.df2, "p_value": test.p_value, "reject_null": test.reject_null}


def _alpha_k(model: GrowthModel):
    fam = model.family
    if isinstance(fam, SingleTerm):
        return {str(fam.k): model.Q_h ** (-fam.k)}
    if isinstance(fam, MultiTerm):
        return {str(k): v for k, v in kernel.alpha_coefficients(fam.weights, model.Q_h).items()}
    return None


def build_report(dataset: Dataset, ladder: LadderReport, settings: Optional[dict] = None) -> dict:
    """Assemble the report document for one ladder run."""
    s = dataset.series
    t_first, t_last = float(s.t[0]), float(s.t[-1])
    span = t_last - t_first
    chosen = ladder.chosen
    m = chosen.model
    gate = ladder.gate
    try:
        x_h = xh_shift(m.family, m.Q_h / float(s.Q[0])) if not isinstance(m.family, Exponential) else None
    except DomainError:
        x_h = None
    forecasts = []
    for frac in FORECAST_HORIZONS:
        fc = forecast(m, t_last + frac * span)
        forecasts.append({"t": fc.t, "Q": fc.Q, "g": fc.g, "x_minus_xh": fc.x_minus_xh})
    return {
        "schema": SCHEMA,
        "input": {"n": len(s), "t_min": t_first, "t_max": t_last, "Q_min": float(s.Q.min()),
                  "Q_max": float(s.Q.max()), "t_unit": dataset.t_unit, "q_unit": dataset.q_unit,
                  "source": dataset.source},
        "settings": settings or {},
        "gates": None if gate is None else {
            "passed": gate.passed, "failed": list(gate.failed), "alpha": gate.alpha,
            "q_trend": _trend(gate.q_trend), "g_trend": _trend(gate.g_trend)},
        "candidates": [_candidate(f, t_first, t_last) for f in ladder.candidates],
        "f_chain": [_f_entry(test, labels) for test, labels in zip(ladder.f_chain, ladder.f_labels)],
        "chosen": {
            **_candidate(chosen, t_first, t_last),
            "x_h": x_h,
            "q_h_ratio": ladder.q_h_ratio,
            "alpha_k": _alpha_k(m),
            "doubling_time": doubling_time(m.g_u),
            "carrying_capacity": carrying_capacity(m),
        },
        "forecasts": forecasts,
    }


def emit_report_json(report: dict) -> bytes:
    return dumps(report)


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------

CURVE_COLUMNS = ("t", "x_minus_xh", "Q_model", "g_model", "Q_data", "rel_residual")


def emit_curves_csv(model: GrowthModel, grid, series=None) -> bytes:
    """Model curve on ``grid`` merged with the observed points.

    Rows are sorted by t. ``Q_data`` and ``rel_residual = Q_data/Q_model - 1``
    are filled only on observed times and left empty elsewhere.
    """
    grid = np.asarray(grid, dtype=np.float64).ravel()
    observed = {}
    if series is not None:
        observed = {float(t): float(q) for t, q in zip(series.t, series.Q)}
    times = np.array(sorted(set(grid.tolist()) | set(observed)))
    fc = forecast(model, times)
    lines = [",".join(CURVE_COLUMNS)]
    for t, x, q, g in zip(times, np.atleast_1d(fc.x_minus_xh), np.atleast_1d(fc.Q), np.atleast_1d(fc.g)):
        row = [format_float(t), format_float(x), format_float(q), format_float(g)]
        if float(t) in observed:
            qd = observed[float(t)]
            row += [format_float(qd), format_float(qd / q - 1.0)]
        else:
            row += ["", ""]
        lines.append(",".join(row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def default_grid(series, n: int = 500, extend: float = 0.5):
    """``n`` evenly spaced times from the first observation to ``extend`` spans past the last."""
    if n < 2:
        raise ValidationError("grid needs at least 2 points")
    t0, t1 = float(series.t[0]), float(series.t[-1])
    return np.linspace(t0, t1 + extend * (t1 - t0), n)
