"""Runaway and saturating rate laws, checked against direct integration.

Run:  python3 demos/05_accelerated_growth.py
"""
import math

import numpy as np

from hinderfit import kernel
from hinderfit.errors import SingularityReached, StepOverflow
from hinderfit.forecast import AccelQuadratic, accel_logistic, accel_quadratic_peak, accel_quadratic_rate, integrate_growth

# A rate that grows with Q reaches infinity in finite time.
K = 1.0
t, Q = integrate_growth(lambda q: 1.0 + q / K, accel_logistic(K, -3.0), (-3.0, 0.6), 1e-3)
print("accelerated logistic, RK4 vs closed form:", np.max(np.abs(Q / accel_logistic(K, t) - 1)))
try:
    accel_logistic(K, math.log(2.0))
except SingularityReached as exc:
    print("at x = ln 2:", exc)
try:
    integrate_growth(lambda q: 1.0 + q / K, 1.0, (0.0, 2.0), 1e-3)
except StepOverflow as exc:
    print("integrator refuses to step through it:", exc)

# Adding a quadratic brake turns the runaway into a peaked rate.
model = AccelQuadratic(g_u=0.3, K=7.0, alpha_q=1.0)
q_peak, g_peak = accel_quadratic_peak(model)
print(f"quadratic brake: fastest growth {g_peak:.4f} at Q = {q_peak}")
print("rate at 2K:", accel_quadratic_rate(model, 14.0))

# Gompertz: the specific rate diverges as Q shrinks, unlike the hindering family.
for m in (1, 4, 8, 12):
    print(f"Gompertz rate at Q = K*1e-{m}: {kernel.gompertz_rate_of_Q(2.0, 1.0, 10.0 ** -m):.3f}")
