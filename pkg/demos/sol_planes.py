"""The planes x = c and y = c of Sol are hyperbolic planes; z = c is not totally geodesic.

Run: python3 demos/sol_planes.py
"""
from geolab import preservation, sol

for surf, expected in preservation.surface_suite()["sol"]:
    rep = preservation.check_totally_geodesic(surf, n_pairs=6, seed=2, expected=expected)
    print(f"{surf.name:18s} {rep.verdict:5s} max chord residual {rep.chord.max:.2e}")

swap = sol.StabilizerIsometry(swap=True)
print("\nstabiliser of the identity:", ", ".join(s.code for s in sol.STABILIZERS))
print("swap sends (1, 2, 3) to", swap((1, 2, 3)))
