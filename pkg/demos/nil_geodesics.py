"""Geodesics of Nil project to points, lines or circles of the plane.

Run: python3 demos/nil_geodesics.py
"""
import math

import numpy as np

from geolab import nil

# one geodesic of each class from the identity
for v in [(0, 0, 1), (1, 0, 0), (1 / math.sqrt(5), 0, 2 / math.sqrt(5))]:
    s = nil.nil_geodesic((0, 0, 0), v, 20.0)
    c = nil.classify_nil_geodesic(s)
    print(f"v = {tuple(round(x, 3) for x in v)}: {c.kind:9s} residual {c.residual:.1e}",
          f"radius {c.radius:.4f}" if c.radius else "")

# a slant climbs by the same height on every turn
w = 0.6
s = nil.nil_geodesic((0, 0, 0), (math.sqrt(1 - w * w), 0, w), 60.0)
c = nil.classify_nil_geodesic(s)
h = nil.wrap_heights(s, c.center)
print("\nwrap heights:", np.round(h, 6))
print("spacing:", np.round(np.diff(h), 9), " predicted:", round(nil.wrap_displacement(w), 9))

# two slants through the identity with incommensurable climbs meet only at the start
a = nil.nil_geodesic((0, 0, 0), nil.slant_with_displacement(8.0), 100.0, 20000)
b = nil.nil_geodesic((0, 0, 0), nil.slant_with_displacement(8.0 * math.sqrt(2), 1.0), 100.0, 20000)
print("\nintersections of D = 8 and D = 8 sqrt 2 slants over t <= 100:",
      nil.slant_intersections(a, b))
