"""Forecast a national population with two frozen parameter sets.

The logistic saturates at twice its hindering level, while the k=1 curve
keeps climbing slowly. Their difference a century out is large.

Run:  python3 demos/04_population_forecast.py
"""
import numpy as np

from hinderfit import GrowthModel, Logistic, SingleTerm, carrying_capacity, doubling_time, forecast

logistic = GrowthModel(Logistic(), 0.0313, 98.6e6, 1914.0)
slow = GrowthModel(SingleTerm(1), 0.0313, 98.6e6, 1914.0)

print(f"early doubling time: {doubling_time(0.0313):.1f} years")
print(f"logistic ceiling: {carrying_capacity(logistic) / 1e6:.1f} million")
print(f"{'year':>6}{'logistic (M)':>15}{'k=1 (M)':>12}{'k=1 rate':>11}")
for year in np.arange(1800, 2101, 50):
    a, b = forecast(logistic, float(year)), forecast(slow, float(year))
    print(f"{year:>6}{a.Q / 1e6:>15.1f}{b.Q / 1e6:>12.1f}{b.g:>11.4f}")
