"""Before fitting, check that Q rises and its growth rate falls.

Run:  python3 demos/02_trend_gates.py
"""
import numpy as np

from hinderfit import GrowthModel, SingleTerm, SynthConfig, TimeSeries, mk_test, synth_generate
from hinderfit.fitting import check_growth_preconditions

r = mk_test(np.arange(1.0, 9.0))
print(f"strictly increasing, n=8: S={r.S} Z={r.Z:.4f} p={r.p_one_tailed:.2e}")

truth = GrowthModel(SingleTerm(1), 0.05, 1000.0, 100.0)
ds = synth_generate(SynthConfig(truth, 0.0, 300.0, 120, 0.02, seed=1))
gate = check_growth_preconditions(ds.series)
print("decelerating synthetic series passes:", gate.passed,
      f"(g trend Z={gate.g_trend.Z:.2f})")

# Pure exponential growth: Q rises but g is flat, so the deceleration gate fails.
t = np.linspace(0.0, 50.0, 80)
rng = np.random.default_rng(4)
flat = TimeSeries(t, np.exp(0.1 * t + 0.02 * rng.standard_normal(t.size)))
gate = check_growth_preconditions(flat)
print("exponential series fails with:", gate.failed)
