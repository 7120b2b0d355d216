"""Numerical laboratory for geodesics of the fibred Thurston geometries.

Submodules:

``core``          charts, metrics, Christoffel symbols, RK4 geodesic flow
``hyperbolic``    H^2 models, Moebius maps, constant-curvature curves
``product``       cylinder, H^2 x R and S^2 x R: slopes, twisting maps,
                  guaranteed sets, intersections, epsilon balls
``sl2r``          universal cover of PSL(2, R) as the unit tangent bundle of H^2:
                  winding maps, parallel-transport lifts, holonomy
``nil``, ``sol``  group laws, isometries, geodesic classes, planes
``shooting``      boundary-value geodesics and chord residuals
``preservation``  geodesic-preservation checks for candidate maps
``cli``           the ``geolab`` command
"""
from . import core, hyperbolic, nil, preservation, product, shooting, sl2r, sol
from .core import CurveSample, GeodesicSpec, TangentVector, geodesic_integrate, get_chart
from .errors import (BoundaryError, DegenerateInputError, GeolabError, OutOfChartError,
                     UnsupportedGeometryError)

__version__ = "0.1.0"

__all__ = [
    "core", "hyperbolic", "nil", "preservation", "product", "shooting", "sl2r", "sol",
    "CurveSample", "GeodesicSpec", "TangentVector", "geodesic_integrate", "get_chart",
    "BoundaryError", "DegenerateInputError", "GeolabError", "OutOfChartError",
    "UnsupportedGeometryError",
]
