"""Command-line entry point: ``hinderfit {trend,fit,forecast,eval,synth}``.

Exit codes: 0 success, 2 invalid input or a failed gate (a JSON error object
goes to stderr), 1 anything unexpected.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import kernel
from .datasets import SynthConfig, dataset_to_csv, format_float, load_csv, synth_generate
from .errors import DomainError, GateFailure, HinderfitError, ParseError, ValidationError
from .fitting import GrowthModel, K_CAP, run_ladder
from .forecast import forecast
from .kernel import Exponential, HinderingWeights, Logistic, MultiTerm, SingleTerm
from .report import build_report, default_grid, dumps, emit_curves_csv, model_from_dict
from .stats import growth_rates, mk_test

FAMILY_CHOICES = ("sth", "logistic", "multi")


class UsageError(ValidationError):
    code = "usage_error"


def _parse_weights(text: str) -> HinderingWeights:
    try:
        terms = {}
        for part in text.split(","):
            k, a = part.split(":")
            terms[int(k)] = float(a)
    except ValueError:
        raise UsageError(f"weights must look like '1:0.5,8:0.5', got {text!r}") from None
    return HinderingWeights(terms)


def _family(args):
    name = args.family
    if name == "sth":
        if args.k is None:
            raise UsageError("--family sth needs --k")
        return SingleTerm(args.k)
    if name == "logistic":
        return Logistic()
    if name == "exponential":
        return Exponential()
    if name == "multi":
        if not args.weights:
            raise UsageError("--family multi needs --weights")
        return MultiTerm(_parse_weights(args.weights))
    raise UsageError(f"unknown family {name!r}")


def _write(data: bytes, path=None):
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_trend(args) -> int:
    ds = load_csv(args.csv, args.t_col, args.q_col)
    if args.on == "q":
        result = mk_test(ds.series, "increasing")
    else:
        result = mk_test(growth_rates(ds.series), "decreasing")
    passed = result.rejects(args.alpha)
    _write(dumps({"on": args.on, "alpha": args.alpha, "n": result.n, "S": result.S,
                  "var_S": result.var_S, "Z": result.Z, "p_one_tailed": result.p_one_tailed,
                  "direction": result.direction, "passed": passed}))
    if not passed:
        _error("gate_failure", f"no significant {result.direction} trend in {args.on}")
        return 2
    return 0


def cmd_fit(args) -> int:
    ds = load_csv(args.csv, args.t_col, args.q_col)
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    unknown = sorted(set(families) - set(FAMILY_CHOICES))
    if unknown:
        raise UsageError(f"unknown families: {', '.join(unknown)}")
    if not 1 <= args.k_max <= K_CAP:
        raise UsageError(f"--k-max must lie in 1..{K_CAP}")
    if args.truncate is not None:
        if args.truncate < 2 or args.truncate > len(ds.series):
            raise UsageError("--truncate must lie between 2 and the number of rows")
        ds = type(ds)(ds.series.head(args.truncate), ds.t_unit, ds.q_unit, ds.source)
    k_range = range(1, args.k_max + 1) if "sth" in families or "multi" in families else range(0)
    ladder = run_ladder(ds.series, alpha=args.alpha, k_range=k_range, max_terms=args.max_terms,
                        include_logistic="logistic" in families, allow_multi="multi" in families,
                        require_gates=not args.force, k_cap=args.k_max)
    settings = {"alpha": args.alpha, "k_max": args.k_max, "max_terms": args.max_terms,
                "families": families, "truncate": args.truncate, "force": args.force}
    _write(dumps(build_report(ds, ladder, settings)), args.out)
    if args.curves:
        grid = default_grid(ds.series, args.grid)
        _write(emit_curves_csv(ladder.chosen.model, grid, ds.series), args.curves)
    return 0


def cmd_forecast(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"report is not valid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict) or doc.get("schema") != "hinderfit/1":
        raise ValidationError("not a hinderfit/1 report")
    try:
        model = model_from_dict(doc["chosen"])
        t_start = float(doc["input"]["t_max"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"report lacks field {exc}") from None
    if not args.to > t_start:
        raise UsageError(f"--to must exceed the last observed time {t_start!r}")
    step = args.step if args.step is not None else (args.to - t_start) / 100.0
    if not step > 0:
        raise UsageError("--step must be positive")
    n = int(np.floor((args.to - t_start) / step + 1e-9))
    times = t_start + step * np.arange(n + 1)
    if times[-1] < args.to:
        times = np.append(times, args.to)
    fc = forecast(model, times)
    lines = ["t,Q,g,x_minus_xh"]
    for row in zip(fc.t, fc.Q, fc.g, fc.x_minus_xh):
        lines.append(",".join(format_float(v) for v in row))
    _write(("\n".join(lines) + "\n").encode("utf-8"))
    return 0


def cmd_eval(args) -> int:
    family = _family(args)
    x = args.x
    h = kernel.h_of_x(family, x)
    out = {"family": kernel.family_label(family), "x": x, "h": h,
           "dh_dx": kernel.dh_dx(family, h),
           "g_factor": kernel.growth_rate_factor(family, h),
           "f": kernel.f_transform(family, h) if h < 2 or not isinstance(family, Logistic) else None,
           "asymmetry": kernel.asymmetry(family, x)}
    _write(dumps(out))
    return 0


def cmd_synth(args) -> int:
    model = GrowthModel(_family(args), g_u=args.gu, Q_h=args.qh, t_h=args.th)
    cfg = SynthConfig(model, args.t0, args.t1, args.n, args.sigma, args.seed)
    _write(dataset_to_csv(synth_generate(cfg)))
    return 0


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hinderfit", description="Hindered-growth fitting and forecasting.")
    sub = p.add_subparsers(dest="command", required=True)

    def columns(sp):
        sp.add_argument("--t-col", default="t", help="name of the time column (default t)")
        sp.add_argument("--q-col", default="Q", help="name of the quantity column (default Q)")

    tr = sub.add_parser("trend", help="Mann-Kendall gate on Q or on its growth rate")
    tr.add_argument("csv")
    tr.add_argument("--alpha", type=float, default=0.05)
    tr.add_argument("--on", choices=("q", "g"), default="q")
    columns(tr)
    tr.set_defaults(func=cmd_trend)

    fit = sub.add_parser("fit", help="gates, candidate fits and the F-test ladder")
    fit.add_argument("csv")
    fit.add_argument("--k-max", type=int, default=K_CAP)
    fit.add_argument("--max-terms", type=int, default=3)
    fit.add_argument("--alpha", type=float, default=0.05)
    fit.add_argument("--families", default=",".join(FAMILY_CHOICES))
    columns(fit)
    fit.add_argument("--out", default=None, help="report path (default stdout)")
    fit.add_argument("--curves", default=None, help="write model/data curves CSV here")
    fit.add_argument("--grid", type=int, default=500, help="curve grid size")
    fit.add_argument("--truncate", type=int, default=None, help="fit only the first N rows")
    fit.add_argument("--force", action="store_true", help="fit even when a gate fails")
    fit.set_defaults(func=cmd_fit)

    fc = sub.add_parser("forecast", help="forecast table from a saved report")
    fc.add_argument("report")
    fc.add_argument("--to", type=float, required=True)
    fc.add_argument("--step", type=float, default=None)
    fc.set_defaults(func=cmd_forecast)

    def family_args(sp):
        sp.add_argument("--family", required=True, choices=("sth", "logistic", "exponential", "multi"))
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--weights", default=None, help="multi-term weights, e.g. 1:0.5,8:0.5")

    ev = sub.add_parser("eval", help="evaluate the hindering function at one x")
    family_args(ev)
    ev.add_argument("--x", type=float, required=True)
    ev.set_defaults(func=cmd_eval)

    sy = sub.add_parser("synth", help="seeded synthetic series as CSV")
    family_args(sy)
    sy.add_argument("--gu", type=float, required=True)
    sy.add_argument("--qh", type=float, required=True)
    sy.add_argument("--th", type=float, required=True)
    sy.add_argument("--t0", type=float, required=True)
    sy.add_argument("--t1", type=float, required=True)
    sy.add_argument("--n", type=int, required=True)
    sy.add_argument("--sigma", type=float, default=0.0)
    sy.add_argument("--seed", type=int, default=0)
    sy.set_defaults(func=cmd_synth)
    return p


def _error(code: str, message: str, **extra):
    payload = {"error": code, "message": message}
    payload.update({k: v for k, v in extra.items() if v is not None})
    sys.stderr.write(dumps(payload).decode("utf-8"))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; keep its 0 for --help
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except GateFailure as exc:
        gate = exc.gate
        _error(exc.code, str(exc), failed=list(gate.failed) if gate is not None else None)
        return 2
    except DomainError as exc:
        _error(exc.code, str(exc), line=getattr(exc, "line", None))
        return 2
    except HinderfitError as exc:
        # optimiser or solver breakdown on valid input
        _error(exc.code, str(exc))
        return 1
    except OSError as exc:
        _error("io_error", str(exc))
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort guard for the exit-code contract
        _error("internal_error", f"{type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
