"""Parallel transport around a hyperbolic triangle rotates by its area.

The transport angle is the fibre coordinate picked up by the horizontal lift
in the unit tangent bundle of H^2.  Run: python3 demos/sl2r_holonomy.py
"""
import math

import numpy as np

from geolab import sl2r

rng = np.random.default_rng(4)
print(f"{'vertices':52s} {'transport':>10s} {'pi - sum':>10s} {'ode':>10s}")
for _ in range(5):
    tri = [(rng.uniform(-1.5, 1.5), rng.uniform(0.3, 2.5)) for _ in range(3)]
    rep = sl2r.holonomy(tri)
    ode = sl2r.holonomy(tri, method="ode")
    verts = "; ".join(f"({u:.2f},{v:.2f})" for u, v in tri)
    print(f"{verts:52s} {rep.transport_defect:10.6f} {rep.defect:10.6f} {ode.transport_defect:10.6f}")

# near-ideal triangles approach the maximal area pi
for h in (1e1, 1e2, 1e3):
    rep = sl2r.holonomy([(-1.0, 1 / h), (1.0, 1 / h), (0.0, h)])
    print(f"vertices pushed to height {h:g}: defect {rep.transport_defect:.6f}  (pi = {math.pi:.6f})")

# slant geodesics: fibre speed over base speed equals the projected curvature
cls = []
for w in (0.5, 1.0, 2.0):
    s = sl2r.sl_geodesic((0.0, 1.0, 0.0), (1.0, 0.0, w - 1.0), 3.0)
    c = sl2r.classify_sl_geodesic(s)
    cls.append(c)
    print(f"fibre speed {w}: {c.kind}/{c.subkind}")
law = sl2r.slant_speed_law(cls)
print(f"fit: vertical speed = {law.slope:.6f} K + {law.intercept:.1e}")
