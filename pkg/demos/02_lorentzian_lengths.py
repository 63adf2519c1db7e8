# Maximizers and non-maximizing geodesics in a Lorentzian metric
# ==============================================================
#
# Adding a time direction gives ``-dt^2 + dx^2 + (1 - |x|^lam) dy^2``.  The
# straight line ``Gamma_0`` from the origin to ``(2 sqrt2 s0, 0, 2 y1)`` is a
# timelike geodesic, and the lifted curves ``(sqrt2 s, gamma(s))`` are too.
# The lifted curves are longer, so ``Gamma_0`` does not maximize length.

import math

import numpy as np

from filigeo.causal import causal_character, hw_lorentzian_lengths, maximize_causal_bvp
from filigeo.extremal import geodesic_bvp_shooting
from filigeo.geodesics import shoot_geodesic
from filigeo.metric_zoo import hw_lorentzian

lam, eps = 1.5, 0.25
m = hw_lorentzian(lam)
L = hw_lorentzian_lengths(lam, eps)
s0, y1 = L["s0"], L["y1"]
q = np.array([2 * math.sqrt(2) * s0, 0.0, 2 * y1])
print(f"L(Gamma_0) = {L['L_gamma0']:.10f}   L(Gamma_pm) = {L['L_gamma_pm']:.10f}")

# ``Gamma_0`` as an integrated geodesic: its tangent norm is constant and negative.

rec = shoot_geodesic(m, [0.0, 0.0, 0.0], q, (0.0, 1.0))
print(f"Gamma_0 is {causal_character(m, rec).verdict}, g(v, v) = {rec.norm_trace[0]:.10f}")

# Shooting with unit timelike initial velocities finds the same three geodesics.

sols = geodesic_bvp_shooting(m, [0.0, 0.0, 0.0], q, 1.2 * 2 * s0, angle_grid=16)
for s in sols:
    print(f"velocity {np.round(s.direction, 6)}  proper time {s.length:.10f}")

# Projected ascent over causal polylines lands on one of the bent curves.

poly = maximize_causal_bvp(m, [0.0, 0.0, 0.0], q, 64)
print(f"maximizer length {poly.info['length']:.8f} after {poly.info['iterations']} iterations,"
      f" midpoint {np.round(poly.nodes[32], 4)}")
