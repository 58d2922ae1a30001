"""Hindering-formalism tools for decelerated growth time series."""
from .datasets import Dataset, SynthConfig, load_csv, parse_csv, synth_generate
from .errors import DomainError, GateFailure, HinderfitError, ValidationError
from .fitting import (
    FitResult,
    GrowthModel,
    LadderReport,
    fit_family,
    predict,
    rss,
    run_ladder,
    select_minimal,
)
from .forecast import Forecast, carrying_capacity, doubling_time, forecast, integrate_growth
from .kernel import (
    DEFAULT_SETTINGS,
    Exponential,
    GompertzRef,
    HinderingWeights,
    Logistic,
    MultiTerm,
    SingleTerm,
    SolverSettings,
    h_of_x,
    x_of_h,
)
from .stats import TimeSeries, f_test, mk_test

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SETTINGS", "Dataset", "DomainError", "Exponential", "FitResult", "Forecast",
    "GateFailure", "GompertzRef", "GrowthModel", "HinderfitError", "HinderingWeights",
    "LadderReport", "Logistic", "MultiTerm", "SingleTerm", "SolverSettings", "SynthConfig",
    "TimeSeries", "ValidationError", "carrying_capacity", "doubling_time", "f_test",
    "fit_family", "forecast", "h_of_x", "integrate_growth", "load_csv", "mk_test", "parse_csv",
    "predict", "rss", "run_ladder", "select_minimal", "synth_generate", "x_of_h",
]
