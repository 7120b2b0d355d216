"""Exception types raised across geolab."""


class GeolabError(ValueError):
    """Base class for domain errors raised by geolab."""


class OutOfChartError(GeolabError):
    """A point lies outside the coordinate domain of its chart."""


class BoundaryError(GeolabError):
    """A finite-difference stencil would leave the chart domain."""


class DegenerateInputError(GeolabError):
    """Input is degenerate: coincident points, zero vectors, collinear triangles."""


class UnsupportedGeometryError(GeolabError):
    """Operation is not defined for the requested geometry."""
