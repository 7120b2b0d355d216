"""Twisting maps of the cylinder preserve geodesics; a nonlinear twist does not.

Run: python3 demos/cylinder_twisting.py
"""
from fractions import Fraction

from geolab import preservation, product

# the points common to every geodesic through (0, 0) and (0, 1)
G = product.guaranteed_set([(0, 0), (0, 1)], "cylinder")
print("guaranteed set:", G.kind, [h for _, h in G.lattice(5)])

# twisting maps slant heights; the guaranteed set moves with them
alpha = Fraction(1, 3)
P = [product.twisting_map(alpha, p) for p in [(0, 0), (0, 1)]]
Gt = product.guaranteed_set([(p.circle, p.height) for p in P], "cylinder")
print("after twisting by 1/3:", [(str(s), h) for s, h in Gt.lattice(3)])

for map_id in ("cylinder:twisting(1.7)", "cylinder:affine(2,1)", "cylinder:nonlinear-twist"):
    rep = preservation.check_preserving(preservation.get_map(map_id), n=3, seed=1)
    print(f"{map_id:28s} {rep.verdict:5s} max residual {max(rep.residuals):.2e}")
