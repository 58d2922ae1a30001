"""Tour of the dimensionless growth functions.

Run:  python3 demos/01_hindering_functions.py
"""
import numpy as np

from hinderfit import kernel
from hinderfit.kernel import HinderingWeights, Logistic, MultiTerm, SingleTerm

# Below x = 0 every family grows almost exponentially; above it they part ways.
families = [SingleTerm(1), SingleTerm(2), SingleTerm(4), Logistic(),
            MultiTerm(HinderingWeights({1: 0.5, 8: 0.5}))]
xs = np.array([-4.0, -2.0, 0.0, 2.0, 4.0, 8.0])

print("h(x)")
print(f"{'family':>18}" + "".join(f"{x:>10.1f}" for x in xs))
for fam in families:
    print(f"{kernel.family_label(fam):>18}" + "".join(f"{h:>10.4f}" for h in kernel.h_of_x(fam, xs)))

# The growth rate relative to the unhindered rate halves at x = 0 for all of them.
print("\nrate factor at h = 1:", [float(kernel.growth_rate_factor(f, 1.0)) for f in families])

# Inverting is explicit, so a round trip is a cheap sanity check.
h = kernel.h_of_x(SingleTerm(3), xs)
print("round trip error:", np.max(np.abs(kernel.x_of_h(SingleTerm(3), h) - xs)))

# Where is growth fastest in absolute terms?
for k in (2, 3, 4, 8):
    x_peak, slope = kernel.derivative_peak(k)
    print(f"k={k}: steepest at x={x_peak:+.6f}, dh/dx={slope:.6f}")

# Unbounded single-term growth creeps like x**(1/k) far from the origin.
for x in (1e2, 1e3, 1e4):
    ratio = kernel.h_of_x(SingleTerm(2), x) / kernel.asymptotic(SingleTerm(2), x, "hindered")
    print(f"k=2 at x={x:g}: h / asymptote = {ratio:.6f}")
