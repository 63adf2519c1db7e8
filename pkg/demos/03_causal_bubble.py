# A causal bubble
# ===============
#
# For ``0 < lam < 1`` the metric
# ``-du^2 + 2(|u|^lam - 1) du dx + |u|^lam (2 - |u|^lam) dx^2``
# is only Hoelder continuous at ``u = 0``.  There the x-axis is a null curve,
# and points just above it can be reached from the origin by causal curves
# but not by timelike ones.  We gather grid evidence for this and compute the
# longest causal curve to such a point.
#
# Output goes to ``demo_output/`` (a PGM image and CSV files).

from pathlib import Path

import numpy as np

from filigeo.causal import GridSpec, causal_character, grid_reachability, maximize_causal_bvp
from filigeo.metric_zoo import bubble, flat

out = Path("demo_output")
m = bubble(0.5)
q = (0.1, 0.8)

# Reachability on grids
# ^^^^^^^^^^^^^^^^^^^^^
# Chords of a stencil are admitted when they are future directed and their
# norm at the midpoint is at most ``K h^2`` (causal) or at most ``-K h^2``
# (timelike).  A breadth-first search from the origin gives both sets.

for h in (1 / 64, 1 / 128):
    grid = GridSpec(((0.0, 0.25), (-0.25, 1.0)), h)
    rs = grid_reachability(m, [0.0, 0.0], grid)
    print(f"h = 1/{round(1 / h)}: causal {rs.reachable(q, 'causal')}, timelike {rs.reachable(q, 'timelike')}")
files = rs.export(out, "bubble")
print("wrote", ", ".join(files.values()))

# In Minkowski space the same search shows no gap: every causal vertex strictly
# inside the cone that the stencil resolves is also timelike reachable.

mf = flat(2, "lorentzian")
gf = GridSpec(((0.0, 1.0), (-1.0, 1.0)), 1 / 32)
rf = grid_reachability(mf, [0.0, 0.0], gf)
P = gf.points().reshape(*gf.shape, 2)
inside = np.abs(P[..., 1]) <= P[..., 0] * (1 - 1 / rf.stencil_radius) - gf.h
print("Minkowski push-up on the grid:", bool(np.all(rf.timelike_reachable[inside & rf.causal_reachable])))

# The maximizer
# ^^^^^^^^^^^^^
# The longest causal polyline first runs along the null axis and then leaves
# it as a timelike curve, so it has no causal character.

poly = maximize_causal_bvp(m, [0.0, 0.0], q, 64, grid_h=1 / 128, grid_bounds=grid.bounds)
cc = causal_character(m, poly)
k = int(np.argmax(np.array(cc.labels) == "timelike"))
print(f"maximizer length {poly.info['length']:.6f}, character {cc.verdict},"
      f" {k} null segments on the axis, leaves it at x = {poly.nodes[k, 1]:.4f}")
poly.to_csv(out / "bubble_maximizer.csv")
