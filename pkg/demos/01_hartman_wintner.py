# Non-unique geodesics in a C^{1,alpha} metric
# ===========================================
#
# The metric ``dx^2 + (1 - |x|^lam) dy^2`` on ``(-1, 1) x R`` has Hoelder
# continuous Christoffel symbols when ``1 < lam < 2``.  Initial value problems
# still have unique solutions, but boundary value problems do not.  Here we
# take ``lam = 1.5`` and follow the geodesic leaving the origin with velocity
# ``(sqrt(eps), sqrt(1 - eps))``.
#
# Run with ``python3 demos/01_hartman_wintner.py``.

import numpy as np

from filigeo import golden
from filigeo.extremal import Polyline, curve_length, dbr_residual, geodesic_bvp_shooting, minimize_bvp
from filigeo.geodesics import find_turning_point, hw_geodesic_family, hw_initial_velocity, shoot_geodesic
from filigeo.metric_zoo import hw_riemannian

lam, eps = 1.5, 0.25
m = hw_riemannian(lam)

# Turning point
# ^^^^^^^^^^^^^
# The geodesic bends back towards the axis after reaching ``x = eps**(1/lam)``.
# Its arclength ``s0`` and height ``y1`` there come from a one-dimensional
# quadrature; the shipped fixtures hold the same numbers from an independent
# high-precision oracle.

fam = hw_geodesic_family(lam, eps)
ref = golden.hw_row(eps)
print(f"s0 = {fam.s0:.15f}   (oracle {ref['s0']:.15f})")
print(f"y1 = {fam.y1:.15f}   (oracle {ref['y1']:.15f})")

rec = shoot_geodesic(m, [0.0, 0.0], hw_initial_velocity(eps), (0.0, 2 * fam.s0))
s_turn, state = find_turning_point(rec)
print(f"integrated turning point {state[:2]} at s = {s_turn:.10f}")
print(f"back on the axis at {rec.position(2 * fam.s0)}")

# Three geodesics to one point
# ^^^^^^^^^^^^^^^^^^^^^^^^^^^^
# The curve and its mirror image both reach ``(0, 2 y1)``, and so does the
# axis itself.  Shooting over a ring of initial directions finds all of them.

q = np.array([0.0, 2 * fam.y1])
sols = geodesic_bvp_shooting(m, [0.0, 0.0], q, 1.2 * q[1], angle_grid=32)
for s in sols:
    print(f"direction {np.round(s.direction, 8)}  length {s.length:.10f}  miss {s.miss:.1e}")

# Minimizers
# ^^^^^^^^^^
# Descending the discrete energy from a curve bent to either side gives two
# different minimizers of equal length ``2 s0``.  The axis has length ``2 y1``,
# which is longer, so the axis geodesic is not minimizing.

axis = curve_length(m, Polyline(np.linspace([0.0, 0.0], q, 257)))
for seed in ("left", "right"):
    poly = minimize_bvp(m, [0.0, 0.0], q, 256, seeds=(seed,))
    dev = dbr_residual(m, poly).max_deviation
    print(f"{seed:>5} minimizer length {poly.info['length']:.8f}  (2 s0 = {2 * fam.s0:.8f}, axis {axis:.8f})"
          f"  du Bois-Reymond deviation {dev:.1e}")
