# How fast do the non-unique geodesics shrink?
# ============================================
#
# In the non-smooth Riemannian example the three geodesics from the origin
# meet again at ``(0, 2 y1(eps))``, and ``y1 -> 0`` as ``eps -> 0``.  The decay
# is slow.  Substituting ``x = eps**(1/lam) z`` in the height integral shows
# ``y1 ~ C eps**(1/lam - 1/2)``, which is ``eps**(1/6)`` for ``lam = 1.5``.  On
# the grid ``eps in {0.4, ..., 0.01}`` the height therefore only drops to about
# 60 % of its first value.

import math

import numpy as np
from scipy.optimize import brentq

from filigeo.geodesics import hw_geodesic_family

lam = 1.5
grid = [0.4, 0.2, 0.1, 0.05, 0.01]
y1 = [hw_geodesic_family(lam, e).y1 for e in grid]
for e, y in zip(grid, y1):
    print(f"eps = {e:<5} y1 = {y:.10f}")
print(f"y1(0.01) / y1(0.4) = {y1[-1] / y1[0]:.4f}")

eps = np.logspace(-2, -8, 7)
ys = np.array([hw_geodesic_family(lam, e).y1 for e in eps])
slopes = np.diff(np.log(ys)) / np.diff(np.log(eps))
print("local exponents:", np.round(slopes, 5), " limit", round(1 / lam - 0.5, 5))

target = brentq(lambda e: hw_geodesic_family(lam, e).y1 - y1[0] / 3, 1e-9, 0.01)
print(f"y1 falls below a third of y1(0.4) only for eps < {target:.3e}")

# ``y1`` is not monotone on all of ``(0, 1)``: it peaks and then falls towards 0
# as ``eps -> 1``.  Each height below the peak is therefore reached by two
# members of the family.  This gives extra solutions of the boundary value
# problem on top of the three named ones.

es = np.linspace(0.05, 0.95, 19)
peak = es[np.argmax([hw_geodesic_family(lam, e).y1 for e in es])]
twin = brentq(lambda e: hw_geodesic_family(lam, e).y1 - hw_geodesic_family(lam, 0.25).y1, peak, 0.95)
print(f"y1 peaks near eps = {peak:.2f}; eps = {twin:.4f} has the same y1 as eps = 0.25,"
      f" initial direction ({math.sqrt(twin):.6f}, {math.sqrt(1 - twin):.6f})")
